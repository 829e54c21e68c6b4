//! Expanded form of the forcing `f(v) = Δ_g² v + R_v − r̄` around the reference metric `g`.
//!
//! With `h = g + ∂∂̄v`, subscripts on `v` denoting Wirtinger derivatives and `g^{i j̄}`,
//! `h^{i j̄}` the inverse metrics:
//!
//! ```text
//! f(v) = (g^{kl̄} g^{iq̄} h^{pj̄} + h^{ij̄} g^{kq̄} h^{pl̄}) v_{pq̄} v_{ij̄kl̄}
//!      + g^{ij̄} ∂_i g^{kl̄} v_{j̄kl̄} + g^{ij̄} ∂_j̄ g^{kl̄} v_{ikl̄} + g^{ij̄} ∂_i∂_j̄ g^{kl̄} v_{kl̄}
//!      + h^{ij̄} h^{kq̄} h^{pl̄} (∂_i g_{pq̄} + v_{ipq̄})(∂_j̄ g_{kl̄} + v_{j̄kl̄})
//!      − h^{ij̄} h^{kl̄} ∂_i∂_j̄ g_{kl̄} − r̄
//! ```
//!
//! The first line is the product form of `(g^{ij̄}g^{kl̄} − h^{ij̄}h^{kl̄}) v_{ij̄kl̄}`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::curvature::up;
use crate::lattice::ScalarField;
use crate::linalg::SmallMatrix;
use crate::real::Real;
use crate::spectral::{SpectralOps, Wirtinger};

type Pair<T> = [SmallMatrix<T>; 2];
type Quad<T> = [[SmallMatrix<T>; 2]; 2];

/// Pointwise Wirtinger derivatives of orders 2 to 4 of a potential.
/// `d3[i]` holds `∂_i v_{kl̄}`, `d3b[j]` holds `∂_j̄ v_{kl̄}`, `d4[i][j]` holds `∂_i∂_j̄ v_{kl̄}`.
#[derive(Debug, Clone)]
pub(crate) struct Jet<T> {
    pub d2: Vec<SmallMatrix<T>>,
    pub d3: Vec<Pair<T>>,
    pub d3b: Vec<Pair<T>>,
    pub d4: Vec<Quad<T>>,
}

impl<T: Real> Jet<T> {
    pub fn compute(ops: &SpectralOps<T>, v: &ScalarField<T>) -> Self {
        let n = ops.lattice().n();
        let len = ops.lattice().len();
        let c = ops.forward(v);
        let field = |o: &[Wirtinger]| ops.derivative(&c, o).expect("order ≤ 4").into_values();
        let z = SmallMatrix::zeros(n);
        let mut d2 = vec![z; len];
        let mut d3 = vec![[z; 2]; len];
        let mut d3b = vec![[z; 2]; len];
        let mut d4 = vec![[[z; 2]; 2]; len];
        for k in 0..n {
            for l in 0..n {
                let (dk, dl) = (Wirtinger::Dz(k), Wirtinger::Dzbar(l));
                for (p, val) in field(&[dk, dl]).into_iter().enumerate() {
                    d2[p].set(k, l, val);
                }
                for i in 0..n {
                    for (p, val) in field(&[Wirtinger::Dz(i), dk, dl]).into_iter().enumerate() {
                        d3[p][i].set(k, l, val);
                    }
                    for (p, val) in field(&[Wirtinger::Dzbar(i), dk, dl]).into_iter().enumerate() {
                        d3b[p][i].set(k, l, val);
                    }
                    for j in 0..n {
                        for (p, val) in field(&[Wirtinger::Dz(i), Wirtinger::Dzbar(j), dk, dl]).into_iter().enumerate() {
                            d4[p][i][j].set(k, l, val);
                        }
                    }
                }
            }
        }
        Self { d2, d3, d3b, d4 }
    }

    pub fn len(&self) -> usize {
        self.d2.len()
    }
}

/// Reference metric `g = g0 + ∂∂̄ψ`, its inverse, and the derivatives of both.
#[derive(Debug, Clone)]
pub(crate) struct ReferenceJet<T> {
    pub n: usize,
    pub g: Vec<SmallMatrix<T>>,
    pub inv: Vec<SmallMatrix<T>>,
    /// `∂_i g`, `∂_j̄ g`, `∂_i∂_j̄ g` as matrices.
    pub dg: Vec<Pair<T>>,
    pub dbg: Vec<Pair<T>>,
    pub ddg: Vec<Quad<T>>,
    /// Derivatives of the plain inverse matrix `M = G⁻¹`.
    pub dinv: Vec<Pair<T>>,
    pub dbinv: Vec<Pair<T>>,
    pub ddinv: Vec<Quad<T>>,
    pub flat: bool,
}

impl<T: Real> ReferenceJet<T> {
    pub fn compute(ops: &SpectralOps<T>, g0: &SmallMatrix<T>, psi: &ScalarField<T>, flat: bool) -> Self {
        let n = g0.dim();
        let psi_jet = Jet::compute(ops, psi);
        let len = psi_jet.len();
        let rows: Vec<_> = (0..len)
            .into_par_iter()
            .map(|p| {
                let g = *g0 + psi_jet.d2[p];
                let m = g.inverse().unwrap_or_else(|| SmallMatrix::scalar(n, T::nan()));
                let dg = psi_jet.d3[p];
                let dbg = psi_jet.d3b[p];
                let ddg = psi_jet.d4[p];
                let neg = |a: SmallMatrix<T>| a.scale(-T::one());
                let dinv = [neg(m * dg[0] * m), neg(m * dg[1] * m)];
                let dbinv = [neg(m * dbg[0] * m), neg(m * dbg[1] * m)];
                let mut ddinv = [[SmallMatrix::zeros(n); 2]; 2];
                for i in 0..n {
                    for j in 0..n {
                        ddinv[i][j] = m * dg[i] * m * dbg[j] * m + m * dbg[j] * m * dg[i] * m - m * ddg[i][j] * m;
                    }
                }
                (g, m, dg, dbg, ddg, dinv, dbinv, ddinv)
            })
            .collect();
        let mut out = Self {
            n,
            g: Vec::with_capacity(len),
            inv: Vec::with_capacity(len),
            dg: Vec::with_capacity(len),
            dbg: Vec::with_capacity(len),
            ddg: Vec::with_capacity(len),
            dinv: Vec::with_capacity(len),
            dbinv: Vec::with_capacity(len),
            ddinv: Vec::with_capacity(len),
            flat,
        };
        for (g, m, dg, dbg, ddg, dinv, dbinv, ddinv) in rows {
            out.g.push(g);
            out.inv.push(m);
            out.dg.push(dg);
            out.dbg.push(dbg);
            out.ddg.push(ddg);
            out.dinv.push(dinv);
            out.dbinv.push(dbinv);
            out.ddinv.push(ddinv);
        }
        out
    }
}

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// `(g^{ij̄}g^{kl̄} − h^{ij̄}h^{kl̄}) v_{ij̄kl̄}` summed directly.
pub(crate) fn fourth_order_direct<T: Real>(n: usize, m: &SmallMatrix<T>, hinv: &SmallMatrix<T>, v4: &Quad<T>) -> Complex<T> {
    let mut s = zero::<T>();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let c = up(m, i, j) * up(m, k, l) - up(hinv, i, j) * up(hinv, k, l);
                    s = s + c * v4[i][j].get(k, l);
                }
            }
        }
    }
    s
}

/// Product form `(g^{kl̄}g^{iq̄}h^{pj̄} + h^{ij̄}g^{kq̄}h^{pl̄}) v_{pq̄} v_{ij̄kl̄}`.
pub(crate) fn fourth_order_product<T: Real>(
    n: usize,
    m: &SmallMatrix<T>,
    hinv: &SmallMatrix<T>,
    v2: &SmallMatrix<T>,
    v4: &Quad<T>,
) -> Complex<T> {
    let mut s = zero::<T>();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut c = zero::<T>();
                    for p in 0..n {
                        for q in 0..n {
                            let w = up(m, k, l) * up(m, i, q) * up(hinv, p, j) + up(hinv, i, j) * up(m, k, q) * up(hinv, p, l);
                            c = c + w * v2.get(p, q);
                        }
                    }
                    s = s + c * v4[i][j].get(k, l);
                }
            }
        }
    }
    s
}

/// `g^{ij̄} ∂_i g^{kl̄} v_{j̄kl̄} + g^{ij̄} ∂_j̄ g^{kl̄} v_{ikl̄} + g^{ij̄} ∂_i∂_j̄ g^{kl̄} v_{kl̄}`.
pub(crate) fn metric_derivative_terms<T: Real>(r: &ReferenceJet<T>, p: usize, v2: &SmallMatrix<T>, v3: &Pair<T>, v3b: &Pair<T>) -> Complex<T> {
    if r.flat {
        return zero();
    }
    let n = r.n;
    let m = &r.inv[p];
    let mut s = zero::<T>();
    for i in 0..n {
        for j in 0..n {
            let gij = up(m, i, j);
            for k in 0..n {
                for l in 0..n {
                    s = s + gij
                        * (up(&r.dinv[p][i], k, l) * v3b[j].get(k, l)
                            + up(&r.dbinv[p][j], k, l) * v3[i].get(k, l)
                            + up(&r.ddinv[p][i][j], k, l) * v2.get(k, l));
                }
            }
        }
    }
    s
}

/// `h^{ij̄} h^{kq̄} h^{pl̄} (∂_i g_{pq̄} + v_{ipq̄})(∂_j̄ g_{kl̄} + v_{j̄kl̄})`.
pub(crate) fn cubic_terms<T: Real>(r: &ReferenceJet<T>, p: usize, hinv: &SmallMatrix<T>, v3: &Pair<T>, v3b: &Pair<T>) -> Complex<T> {
    let n = r.n;
    let mut s = zero::<T>();
    for i in 0..n {
        let a = r.dg[p][i] + v3[i];
        // raised[k][l] = h^{kq̄} h^{pl̄} a_{pq̄}
        let raised = SmallMatrix::from_fn(n, |k, l| {
            let mut c = zero::<T>();
            for pp in 0..n {
                for q in 0..n {
                    c = c + up(hinv, k, q) * up(hinv, pp, l) * a.get(pp, q);
                }
            }
            c
        });
        for j in 0..n {
            let b = r.dbg[p][j] + v3b[j];
            let mut c = zero::<T>();
            for k in 0..n {
                for l in 0..n {
                    c = c + raised.get(k, l) * b.get(k, l);
                }
            }
            s = s + up(hinv, i, j) * c;
        }
    }
    s
}

/// Curvature part of the expansion: [`cubic_terms`] `− h^{ij̄} h^{kl̄} ∂_i∂_j̄ g_{kl̄}`.
pub(crate) fn curvature_terms<T: Real>(r: &ReferenceJet<T>, p: usize, hinv: &SmallMatrix<T>, v3: &Pair<T>, v3b: &Pair<T>) -> Complex<T> {
    let mut s = cubic_terms(r, p, hinv, v3, v3b);
    if !r.flat {
        let n = r.n;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s = s - up(hinv, i, j) * up(hinv, k, l) * r.ddg[p][i][j].get(k, l);
                    }
                }
            }
        }
    }
    s
}

pub(crate) fn perturbed_inverse<T: Real>(r: &ReferenceJet<T>, p: usize, v2: &SmallMatrix<T>) -> Option<SmallMatrix<T>> {
    (r.g[p] + *v2).inverse()
}
