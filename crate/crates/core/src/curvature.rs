//! Curvature tensors of a Kähler metric in the global torus chart.
//!
//! Index convention: [`HermitianMetricField`] holds the matrix `G` with
//! `G[i][j] = g_{i j̄}`; inverse fields hold the plain matrix inverse `M = G⁻¹`, so the
//! raised metric is `g^{i j̄} = M[j][i]`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::Result;
use crate::lattice::{ScalarField, SpectralCoeffs};
use crate::linalg::SmallMatrix;
use crate::metric::{inverse_and_det, HermitianMetricField};
use crate::real::Real;
use crate::spectral::{SpectralOps, Wirtinger};

/// `g^{i j̄}` read from a plain matrix inverse.
#[inline]
pub(crate) fn up<T: Real>(inv: &SmallMatrix<T>, i: usize, j: usize) -> Complex<T> {
    inv.get(j, i)
}

#[derive(Debug, Clone)]
pub struct CurvatureReport<T> {
    pub ricci: HermitianMetricField<T>,
    pub scalar: ScalarField<T>,
    pub rbar: T,
    pub calabi_energy: T,
    pub max_riemann: T,
    /// Largest imaginary residue discarded when forming the scalar curvature.
    pub scalar_imag_residue: T,
}

fn log_det_coeffs<T: Real>(ops: &SpectralOps<T>, det: &ScalarField<T>) -> SpectralCoeffs<T> {
    let mut c = ops.forward(&det.map(|d| d.ln()));
    if ops.dealias() {
        ops.dealias_filter(&mut c);
    }
    c
}

/// `R_{i j̄} = −∂_i ∂_j̄ log det g`.
pub fn ricci<T: Real>(ops: &SpectralOps<T>, g: &HermitianMetricField<T>, pd_floor: T) -> Result<HermitianMetricField<T>> {
    let (_, det) = inverse_and_det(g, pd_floor)?;
    Ok(ops.dd_bar_coeffs(&log_det_coeffs(ops, &det)).scaled(-T::one()))
}

fn trace_against<T: Real>(inv: &HermitianMetricField<T>, ric: &HermitianMetricField<T>) -> (Vec<T>, T) {
    let pairs: Vec<(T, T)> = (0..inv.len())
        .into_par_iter()
        .map(|p| {
            let tr = (inv.at(p) * ric.at(p)).trace();
            (tr.re, tr.im.abs())
        })
        .collect();
    let residue = pairs.iter().fold(T::zero(), |m, &(_, im)| m.max(im));
    (pairs.into_iter().map(|(re, _)| re).collect(), residue)
}

/// `R = g^{i j̄} R_{i j̄}` together with the largest discarded imaginary part.
pub fn scalar_curvature_with_residue<T: Real>(
    ops: &SpectralOps<T>,
    g: &HermitianMetricField<T>,
    pd_floor: T,
) -> Result<(ScalarField<T>, T)> {
    let (inv, det) = inverse_and_det(g, pd_floor)?;
    let ric = ops.dd_bar_coeffs(&log_det_coeffs(ops, &det)).scaled(-T::one());
    let (vals, residue) = trace_against(&inv, &ric);
    Ok((ScalarField::from_values(*g.lattice(), vals)?, residue))
}

pub fn scalar_curvature<T: Real>(ops: &SpectralOps<T>, g: &HermitianMetricField<T>, pd_floor: T) -> Result<ScalarField<T>> {
    Ok(scalar_curvature_with_residue(ops, g, pd_floor)?.0)
}

/// Volume-weighted mean `Σ R det g / Σ det g`.
pub fn weighted_average<T: Real>(scalar: &ScalarField<T>, det: &ScalarField<T>) -> T {
    let num: T = scalar.values().iter().zip(det.values()).map(|(&r, &d)| r * d).sum();
    let den: T = det.values().iter().copied().sum();
    num / den
}

pub fn average_scalar<T: Real>(ops: &SpectralOps<T>, g: &HermitianMetricField<T>, pd_floor: T) -> Result<T> {
    let r = scalar_curvature(ops, g, pd_floor)?;
    Ok(weighted_average(&r, &g.det()))
}

/// `Σ (R − r̄)² det g · (L/N)^{2n}` for a precomputed scalar curvature.
pub fn calabi_energy_of<T: Real>(scalar: &ScalarField<T>, det: &ScalarField<T>, rbar: T) -> T {
    let cell = scalar.lattice().cell_volume();
    scalar
        .values()
        .iter()
        .zip(det.values())
        .map(|(&r, &d)| (r - rbar) * (r - rbar) * d)
        .sum::<T>()
        * cell
}

pub fn calabi_energy<T: Real>(ops: &SpectralOps<T>, g: &HermitianMetricField<T>, rbar: T, pd_floor: T) -> Result<T> {
    let r = scalar_curvature(ops, g, pd_floor)?;
    Ok(calabi_energy_of(&r, &g.det(), rbar))
}

type Tensor4<T> = [[[[Complex<T>; 2]; 2]; 2]; 2];

fn zero4<T: Real>() -> Tensor4<T> {
    [[[[Complex::new(T::zero(), T::zero()); 2]; 2]; 2]; 2]
}

/// `|T|² = g^{i ā} g^{b j̄} g^{k c̄} g^{d l̄} T_{i j̄ k l̄} conj(T_{a b̄ c d̄})`.
fn tensor_norm_sqr<T: Real>(t: &Tensor4<T>, inv: &SmallMatrix<T>, n: usize) -> T {
    let m = |r: usize, c: usize| inv.get(r, c);
    let mut u1 = zero4::<T>();
    let mut u2 = zero4::<T>();
    for a in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    u1[a][j][k][l] = (0..n).fold(Complex::new(T::zero(), T::zero()), |s, i| s + m(a, i) * t[i][j][k][l]);
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            for k in 0..n {
                for l in 0..n {
                    u2[a][b][k][l] = (0..n).fold(Complex::new(T::zero(), T::zero()), |s, j| s + m(j, b) * u1[a][j][k][l]);
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for l in 0..n {
                    u1[a][b][c][l] = (0..n).fold(Complex::new(T::zero(), T::zero()), |s, k| s + m(c, k) * u2[a][b][k][l]);
                }
            }
        }
    }
    let mut total = T::zero();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let raised = (0..n).fold(Complex::new(T::zero(), T::zero()), |s, l| s + m(l, d) * u1[a][b][c][l]);
                    total = total + (raised * t[a][b][c][d].conj()).re;
                }
            }
        }
    }
    total
}

/// Pointwise curvature tensor `R_{i j̄ k l̄} = −∂_i∂_j̄ g_{k l̄} + g^{p q̄}(∂_i g_{k q̄})(∂_j̄ g_{p l̄})`.
fn riemann_tensors<T: Real>(ops: &SpectralOps<T>, g: &HermitianMetricField<T>, inv: &HermitianMetricField<T>) -> Vec<Tensor4<T>> {
    let n = g.n();
    let len = g.len();
    // dg[i][k][l] = ∂_i g_{k l̄}, dbg[j][k][l] = ∂_j̄ g_{k l̄}, ddg[i][j][k][l] = ∂_i∂_j̄ g_{k l̄}
    let mut dg = vec![vec![vec![Vec::new(); n]; n]; n];
    let mut dbg = vec![vec![vec![Vec::new(); n]; n]; n];
    let mut ddg = vec![vec![vec![vec![Vec::new(); n]; n]; n]; n];
    for k in 0..n {
        for l in 0..n {
            let c = ops.forward_complex(&g.entry_field(k, l));
            for i in 0..n {
                dg[i][k][l] = ops.derivative(&c, &[Wirtinger::Dz(i)]).expect("order 1").into_values();
                dbg[i][k][l] = ops.derivative(&c, &[Wirtinger::Dzbar(i)]).expect("order 1").into_values();
                for j in 0..n {
                    ddg[i][j][k][l] = ops
                        .derivative(&c, &[Wirtinger::Dz(i), Wirtinger::Dzbar(j)])
                        .expect("order 2")
                        .into_values();
                }
            }
        }
    }
    (0..len)
        .into_par_iter()
        .map(|pt| {
            let ginv = inv.at(pt);
            let mut t = zero4::<T>();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let mut v = -ddg[i][j][k][l][pt];
                            for p in 0..n {
                                for q in 0..n {
                                    v = v + up(&ginv, p, q) * dg[i][k][q][pt] * dbg[j][p][l][pt];
                                }
                            }
                            t[i][j][k][l] = v;
                        }
                    }
                }
            }
            t
        })
        .collect()
}

/// Pointwise `|Rm|` with the full metric contraction on all four slots.
/// For `n = 1` this equals `|R|` pointwise.
pub fn riemann_norm<T: Real>(ops: &SpectralOps<T>, g: &HermitianMetricField<T>, pd_floor: T) -> Result<ScalarField<T>> {
    let (inv, _) = inverse_and_det(g, pd_floor)?;
    let tensors = riemann_tensors(ops, g, &inv);
    let n = g.n();
    let vals = tensors
        .par_iter()
        .enumerate()
        .map(|(p, t)| tensor_norm_sqr(t, &inv.at(p), n).max(T::zero()).sqrt())
        .collect();
    ScalarField::from_values(*g.lattice(), vals)
}

/// Trace `g^{k l̄} R_{i j̄ k l̄}` of the curvature tensor; agrees with [`ricci`].
pub fn ricci_from_riemann<T: Real>(ops: &SpectralOps<T>, g: &HermitianMetricField<T>, pd_floor: T) -> Result<HermitianMetricField<T>> {
    let (inv, _) = inverse_and_det(g, pd_floor)?;
    let tensors = riemann_tensors(ops, g, &inv);
    let n = g.n();
    let pts: Vec<SmallMatrix<T>> = tensors
        .par_iter()
        .enumerate()
        .map(|(p, t)| {
            let ginv = inv.at(p);
            SmallMatrix::from_fn(n, |i, j| {
                let mut s = Complex::new(T::zero(), T::zero());
                for k in 0..n {
                    for l in 0..n {
                        s = s + up(&ginv, k, l) * t[i][j][k][l];
                    }
                }
                s
            })
        })
        .collect();
    Ok(HermitianMetricField::from_points(*g.lattice(), &pts))
}

/// All curvature quantities of `g`, with `rbar` taken as the class constant.
pub fn curvature_report<T: Real>(ops: &SpectralOps<T>, g: &HermitianMetricField<T>, rbar: T, pd_floor: T) -> Result<CurvatureReport<T>> {
    let (inv, det) = inverse_and_det(g, pd_floor)?;
    let ric = ops.dd_bar_coeffs(&log_det_coeffs(ops, &det)).scaled(-T::one());
    let (vals, residue) = trace_against(&inv, &ric);
    let scalar = ScalarField::from_values(*g.lattice(), vals)?;
    let calabi = calabi_energy_of(&scalar, &det, rbar);
    let rm = riemann_norm(ops, g, pd_floor)?;
    Ok(CurvatureReport {
        ricci: ric,
        rbar,
        calabi_energy: calabi,
        max_riemann: rm.sup_norm(),
        scalar_imag_residue: residue,
        scalar,
    })
}
