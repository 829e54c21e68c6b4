//! Grid surrogates of the Hölder norms `c^{k,α}`, the weighted trajectory norm, and
//! exponential-decay fitting.

use rayon::prelude::*;

use crate::error::{CalabiError, Result};
use crate::lattice::{ScalarField, SpectralCoeffs, TorusLattice, MAX_AXES};
use crate::real::Real;
use crate::spectral::{MultiIndex, SpectralOps, MAX_ORDER};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderParams {
    pub alpha: f64,
    pub pair_stride: usize,
    pub max_separation: usize,
}

impl HolderParams {
    /// `α = 1/2`, stride `max(1, N/32)`, separation cap `N/4` cells.
    pub fn for_size(size: usize) -> Self {
        Self { alpha: 0.5, pair_stride: (size / 32).max(1), max_separation: size / 4 }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.pair_stride = stride;
        self
    }

    pub fn validate<T: Real>(&self, lattice: &TorusLattice<T>) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CalabiError::InvalidLattice(format!("hölder exponent {} outside (0, 1)", self.alpha)));
        }
        if self.pair_stride == 0 || self.max_separation == 0 {
            return Err(CalabiError::InvalidLattice("hölder stride and separation must be at least 1".into()));
        }
        if 2 * self.max_separation >= lattice.size() {
            return Err(CalabiError::InvalidLattice(format!(
                "hölder separation {} must be below N/2 = {}",
                self.max_separation,
                lattice.size() / 2
            )));
        }
        Ok(())
    }
}

/// All multi-indices of total order `order` over the first `dim` axes.
pub fn multi_indices(dim: usize, order: usize) -> Vec<MultiIndex> {
    fn rec(axis: usize, dim: usize, left: usize, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if axis + 1 == dim {
            cur[axis] = left as u8;
            out.push(*cur);
            cur[axis] = 0;
            return;
        }
        for m in (0..=left).rev() {
            cur[axis] = m as u8;
            rec(axis + 1, dim, left - m, cur, out);
        }
        cur[axis] = 0;
    }
    let mut out = Vec::new();
    rec(0, dim, order, &mut [0; MAX_AXES], &mut out);
    out
}

/// Offsets in stride multiples with Chebyshev length ≤ cap, one per `±` pair.
fn half_space_offsets(dim: usize, stride: usize, cap: usize) -> Vec<[isize; MAX_AXES]> {
    let steps = (cap / stride) as isize;
    let s = stride as isize;
    let side = (2 * steps + 1) as usize;
    let mut out = Vec::new();
    for code in 0..side.pow(dim as u32) {
        let mut o = [0isize; MAX_AXES];
        let mut c = code;
        for a in o.iter_mut().take(dim) {
            *a = ((c % side) as isize - steps) * s;
            c /= side;
        }
        if o.iter().take(dim).find(|&&v| v != 0).is_some_and(|&v| v > 0) {
            out.push(o);
        }
    }
    out
}

/// Max over sampled pairs of `|f(p) − f(q)| / dist(p, q)^α`.
pub fn holder_seminorm<T: Real>(f: &ScalarField<T>, params: &HolderParams) -> T {
    let lat = *f.lattice();
    let dim = lat.real_dim();
    let size = lat.size();
    let h = lat.spacing();
    let alpha = T::lit(params.alpha);
    let offsets: Vec<([isize; MAX_AXES], T)> = half_space_offsets(dim, params.pair_stride, params.max_separation)
        .into_iter()
        .map(|o| {
            let d2: T = o.iter().take(dim).map(|&v| T::from_usize_lossy(v.unsigned_abs()).powi(2)).sum();
            (o, (d2.sqrt() * h).powf(-alpha))
        })
        .collect();
    let per_axis = size.div_ceil(params.pair_stride);
    let bases = per_axis.pow(dim as u32);
    let vals = f.values();
    (0..bases)
        .into_par_iter()
        .map(|b| {
            let mut p = [0usize; MAX_AXES];
            let mut c = b;
            for a in p.iter_mut().take(dim) {
                *a = (c % per_axis) * params.pair_stride;
                c /= per_axis;
            }
            let fp = vals[lat.flat_index(&p[..dim])];
            let mut q = [0usize; MAX_AXES];
            offsets.iter().fold(T::zero(), |best, (o, w)| {
                for a in 0..dim {
                    q[a] = (p[a] as isize + o[a]).rem_euclid(size as isize) as usize;
                }
                best.max((fp - vals[lat.flat_index(&q[..dim])]).abs() * *w)
            })
        })
        .reduce(T::zero, |a, b| a.max(b))
}

/// Derivatives `∂^β f` for all `|β| ≤ k`, grouped by order.
fn derivative_ladder<T: Real>(ops: &SpectralOps<T>, c: &SpectralCoeffs<T>, f: &ScalarField<T>, k: usize) -> Result<Vec<Vec<ScalarField<T>>>> {
    let dim = f.lattice().real_dim();
    (0..=k)
        .map(|m| {
            if m == 0 {
                return Ok(vec![f.clone()]);
            }
            multi_indices(dim, m).iter().map(|a| ops.real_derivative(c, a)).collect()
        })
        .collect()
}

/// `Σ_{|β| ≤ k} ‖∂^β f‖∞ + max_{|β| = k} [∂^β f]_α`.
pub fn holder_norm<T: Real>(ops: &SpectralOps<T>, f: &ScalarField<T>, k: usize, params: &HolderParams) -> Result<T> {
    if k > MAX_ORDER {
        return Err(CalabiError::UnsupportedOrder(k));
    }
    if f.lattice() != ops.lattice() {
        return Err(CalabiError::LatticeMismatch);
    }
    params.validate(f.lattice())?;
    let ladder = derivative_ladder(ops, &ops.forward(f), f, k)?;
    let sup: T = ladder.iter().flatten().map(|d| d.sup_norm()).sum();
    let semi = ladder[k].iter().fold(T::zero(), |m, d| m.max(holder_seminorm(d, params)));
    Ok(sup + semi)
}

/// Several orders at once, sharing the forward transform; `out[j]` is the norm of order `orders[j]`.
pub fn holder_norms<T: Real>(ops: &SpectralOps<T>, f: &ScalarField<T>, orders: &[usize], params: &HolderParams) -> Result<Vec<T>> {
    let kmax = orders.iter().copied().max().unwrap_or(0);
    if kmax > MAX_ORDER {
        return Err(CalabiError::UnsupportedOrder(kmax));
    }
    params.validate(f.lattice())?;
    let ladder = derivative_ladder(ops, &ops.forward(f), f, kmax)?;
    let sups: Vec<T> = ladder.iter().map(|ds| ds.iter().map(|d| d.sup_norm()).sum()).collect();
    Ok(orders
        .iter()
        .map(|&k| {
            let semi = ladder[k].iter().fold(T::zero(), |m, d| m.max(holder_seminorm(d, params)));
            sups[..=k].iter().copied().sum::<T>() + semi
        })
        .collect())
}

/// `‖f‖²_{3,α} / (‖f‖_{2,α} ‖f‖_{4,α})`.
pub fn interpolation_ratio<T: Real>(ops: &SpectralOps<T>, f: &ScalarField<T>, params: &HolderParams) -> Result<T> {
    if f.sup_norm() == T::zero() {
        return Err(CalabiError::UndefinedRatio);
    }
    let n = holder_norms(ops, f, &[2, 3, 4], params)?;
    Ok(n[1] * n[1] / (n[0] * n[2]))
}

#[derive(Debug, Clone)]
pub struct TrajectorySnapshot<T> {
    pub t: T,
    pub phi: ScalarField<T>,
    /// `R − R̄` at this time.
    pub phi_dot: ScalarField<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryNorms {
    pub t: Vec<f64>,
    pub phi_2a: Vec<f64>,
    pub phi_4a: Vec<f64>,
    pub phi_dot_0a: Vec<f64>,
    /// `t^{1/2}(‖φ̇‖_{0,α} + ‖φ‖_{4,α})`.
    pub weighted: Vec<f64>,
    pub weighted_sup: f64,
    /// `sup_t t^{1/2} ‖φ(t)‖_{4,α}`.
    pub smoothing_sup: f64,
    /// `weighted_sup / ‖φ₀‖_{2,α}`; zero when both vanish.
    pub c_meas: f64,
    /// `smoothing_sup / ‖φ₀‖_{2,α}`; zero when both vanish.
    pub c_smoothing: f64,
}

fn quotient(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn weighted_trajectory_norm<T: Real>(
    ops: &SpectralOps<T>,
    traj: &[TrajectorySnapshot<T>],
    params: &HolderParams,
) -> Result<TrajectoryNorms> {
    if traj.len() < 2 {
        return Err(CalabiError::InsufficientData { needed: 2, got: traj.len() });
    }
    let mut out = TrajectoryNorms {
        t: Vec::new(),
        phi_2a: Vec::new(),
        phi_4a: Vec::new(),
        phi_dot_0a: Vec::new(),
        weighted: Vec::new(),
        weighted_sup: 0.0,
        smoothing_sup: 0.0,
        c_meas: 0.0,
        c_smoothing: 0.0,
    };
    for snap in traj {
        let n = holder_norms(ops, &snap.phi, &[2, 4], params)?;
        let d = holder_norm(ops, &snap.phi_dot, 0, params)?.to_f64_lossy();
        let t = snap.t.to_f64_lossy();
        let (n2, n4) = (n[0].to_f64_lossy(), n[1].to_f64_lossy());
        let w = t.max(0.0).sqrt() * (d + n4);
        out.weighted_sup = out.weighted_sup.max(w);
        out.smoothing_sup = out.smoothing_sup.max(t.max(0.0).sqrt() * n4);
        out.t.push(t);
        out.phi_2a.push(n2);
        out.phi_4a.push(n4);
        out.phi_dot_0a.push(d);
        out.weighted.push(w);
    }
    if out.weighted.iter().chain(&out.phi_2a).any(|v| !v.is_finite()) {
        return Err(CalabiError::Format("non-finite trajectory norm".into()));
    }
    out.c_meas = quotient(out.weighted_sup, out.phi_2a[0]);
    out.c_smoothing = quotient(out.smoothing_sup, out.phi_2a[0]);
    Ok(out)
}

/// Least-squares line through `(t, ln v)`: returns `(−slope, r²)`.
pub fn fit_exponential_decay(series: &[(f64, f64)]) -> Result<(f64, f64)> {
    if series.len() < 5 {
        return Err(CalabiError::InsufficientData { needed: 5, got: series.len() });
    }
    if let Some((i, &(_, v))) = series.iter().enumerate().find(|(_, p)| !(p.1 > 0.0)) {
        return Err(CalabiError::NonPositiveValue { index: i, value: v });
    }
    let m = series.len() as f64;
    let tm = series.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = series.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in series {
        let (dx, dy) = (t - tm, v.ln() - ym);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(CalabiError::InsufficientData { needed: 2, got: 1 });
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((-slope, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Mode;
    use crate::linalg::SmallMatrix;
    use crate::semigroup::BilaplacianSymbol;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn ops(n: usize, size: usize) -> SpectralOps<f64> {
        SpectralOps::new(TorusLattice::new(n, size, 1.0).unwrap())
    }

    fn random_field(ops: &SpectralOps<f64>, rng: &mut ChaCha8Rng, band: i64) -> ScalarField<f64> {
        let dim = ops.lattice().real_dim();
        let modes: Vec<Mode> = (0..6)
            .map(|_| {
                let k: Vec<i64> = (0..dim).map(|_| rng.gen_range(-band..=band)).collect();
                Mode::new(k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        ScalarField::from_modes(*ops.lattice(), &modes).unwrap()
    }

    /// All unordered pairs with wrapped Chebyshev separation ≤ cap.
    fn exhaustive_seminorm(f: &ScalarField<f64>, alpha: f64, cap: usize) -> f64 {
        let lat = *f.lattice();
        let size = lat.size() as isize;
        let h = lat.spacing();
        let mut best = 0.0f64;
        for p in 0..lat.len() {
            for q in (p + 1)..lat.len() {
                let (mp, mq) = (lat.multi_index(p), lat.multi_index(q));
                let mut cheb = 0;
                let mut d2 = 0.0;
                for a in 0..lat.real_dim() {
                    let d = (mp[a] as isize - mq[a] as isize).rem_euclid(size);
                    let w = d.min(size - d) as usize;
                    cheb = cheb.max(w);
                    d2 += (w as f64 * h).powi(2);
                }
                if cheb <= cap {
                    best = best.max((f.values()[p] - f.values()[q]).abs() / d2.sqrt().powf(alpha));
                }
            }
        }
        best
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 0).len(), 1);
        assert_eq!(multi_indices(2, 3).len(), 4);
        assert_eq!(multi_indices(4, 4).len(), 35);
        assert!(multi_indices(4, 2).iter().all(|a| a.iter().map(|&v| v as usize).sum::<usize>() == 2));
    }

    #[test]
    fn constant_field_norm_is_abs_value() {
        let o = ops(1, 16);
        let f = ScalarField::constant(*o.lattice(), -2.5);
        let p = HolderParams::for_size(16);
        for k in 0..=4 {
            assert!((holder_norm(&o, &f, k, &p).unwrap() - 2.5).abs() < 1e-12);
        }
        assert!(matches!(holder_norm(&o, &f, 5, &p), Err(CalabiError::UnsupportedOrder(5))));
    }

    #[test]
    fn seminorm_matches_exhaustive_oracle_at_stride_one() {
        let o = ops(1, 32);
        let f = ScalarField::from_modes(*o.lattice(), &[Mode::cos([1, 0], 1.0)]).unwrap();
        let p = HolderParams::for_size(32);
        assert_eq!(p.pair_stride, 1);
        let got = holder_seminorm(&f, &p);
        let want = exhaustive_seminorm(&f, 0.5, p.max_separation);
        assert!((got - want).abs() <= 1e-14 * want, "{got} vs {want}");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_field(&o, &mut rng, 4);
        assert!((holder_seminorm(&g, &p) - exhaustive_seminorm(&g, 0.5, p.max_separation)).abs() < 1e-12);
    }

    #[test]
    fn subsampled_seminorm_is_bounded_by_exhaustive() {
        let o = ops(1, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_field(&o, &mut rng, 5);
        let full = exhaustive_seminorm(&f, 0.5, 8);
        for stride in [2, 4] {
            let p = HolderParams::for_size(32).with_stride(stride);
            assert!(holder_seminorm(&f, &p) <= full * (1.0 + 1e-14));
        }
    }

    #[test]
    fn norm_homogeneity_and_triangle_inequality() {
        let o = ops(1, 32);
        let p = HolderParams::for_size(32);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let f = random_field(&o, &mut rng, 4);
            let g = random_field(&o, &mut rng, 4);
            for k in [0, 2, 4] {
                let nf = holder_norm(&o, &f, k, &p).unwrap();
                let ng = holder_norm(&o, &g, k, &p).unwrap();
                let nfg = holder_norm(&o, &(&f + &g), k, &p).unwrap();
                assert!(nfg <= (nf + ng) * (1.0 + 1e-12));
                let scaled = holder_norm(&o, &f.scaled(-3.0), k, &p).unwrap();
                assert!((scaled - 3.0 * nf).abs() < 1e-11 * nf);
            }
        }
    }

    #[test]
    fn derivative_sup_terms_nest() {
        let o = ops(2, 8);
        let p = HolderParams::for_size(8).with_stride(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_field(&o, &mut rng, 2);
        let n: Vec<f64> = (0..=4).map(|k| holder_norm(&o, &f, k, &p).unwrap()).collect();
        let c = o.forward(&f);
        for k in 0..4 {
            let top: f64 = multi_indices(4, k)
                .iter()
                .map(|a| if k == 0 { f.sup_norm() } else { o.real_derivative(&c, a).unwrap().sup_norm() })
                .sum();
            assert!(n[k + 1] >= top);
        }
        let batch = holder_norms(&o, &f, &[0, 2, 4], &p).unwrap();
        assert!((batch[0] - n[0]).abs() < 1e-12 && (batch[1] - n[2]).abs() < 1e-9 && (batch[2] - n[4]).abs() < 1e-6 * n[4]);
    }

    #[test]
    fn interpolation_ratio_scale_invariant_and_refinement_stable() {
        let p32 = HolderParams::for_size(32);
        let p64 = HolderParams::for_size(64);
        let (o32, o64) = (ops(1, 32), ops(1, 64));
        let mode = [Mode::cos([1, 0], 1.0)];
        let f32_ = ScalarField::from_modes(*o32.lattice(), &mode).unwrap();
        let f64_ = ScalarField::from_modes(*o64.lattice(), &mode).unwrap();
        let r32 = interpolation_ratio(&o32, &f32_, &p32).unwrap();
        let r64 = interpolation_ratio(&o64, &f64_, &p64).unwrap();
        assert!((r32 / r64 - 1.0).abs() < 0.05, "{r32} {r64}");
        let rs = interpolation_ratio(&o32, &f32_.scaled(7.0), &p32).unwrap();
        assert!((rs - r32).abs() < 1e-10 * r32);
        assert!(matches!(
            interpolation_ratio(&o32, &ScalarField::zeros(*o32.lattice()), &p32),
            Err(CalabiError::UndefinedRatio)
        ));
    }

    #[test]
    fn fit_recovers_synthetic_rates() {
        let exact: Vec<(f64, f64)> = (0..20).map(|i| (i as f64 * 0.1, (-3.0 * i as f64 * 0.1).exp())).collect();
        let (rate, r2) = fit_exponential_decay(&exact).unwrap();
        assert!((rate - 3.0).abs() < 1e-10 && (r2 - 1.0).abs() < 1e-12);
        let mixed: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let t = i as f64 * 0.2;
                (t, (-t).exp() + (-5.0 * t).exp())
            })
            .collect();
        let (rate, r2) = fit_exponential_decay(&mixed).unwrap();
        assert!(rate > 1.0 && rate < 5.0 && r2 < 1.0);
        let flat: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 2.0)).collect();
        assert_eq!(fit_exponential_decay(&flat).unwrap().0, 0.0);
        assert!(fit_exponential_decay(&exact[..4]).is_err());
        let mut bad = exact.clone();
        bad[2].1 = 0.0;
        assert!(matches!(fit_exponential_decay(&bad), Err(CalabiError::NonPositiveValue { index: 2, .. })));
    }

    #[test]
    fn fit_recovers_semigroup_eigenvalue() {
        let o = ops(1, 16);
        let sym = BilaplacianSymbol::build(&o, &SmallMatrix::identity(1)).unwrap();
        let x = ScalarField::from_modes(*o.lattice(), &[Mode::cos([1, 1], 1.0)]).unwrap();
        let lam = sym.lambda()[o.lattice().frequency_slot(&[1, 1]).unwrap()];
        let series: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let t = i as f64 * 2e-3;
                (t, sym.semigroup_apply(&o, &x, t).unwrap().sup_norm())
            })
            .collect();
        let (rate, _) = fit_exponential_decay(&series).unwrap();
        assert!((rate / lam - 1.0).abs() < 1e-8, "{rate} vs {lam}");
    }

    #[test]
    fn trajectory_norms_zero_and_linear() {
        let o = ops(1, 16);
        let p = HolderParams::for_size(16);
        let zero = ScalarField::zeros(*o.lattice());
        let traj: Vec<TrajectorySnapshot<f64>> = [0.0, 0.1, 0.2]
            .iter()
            .map(|&t| TrajectorySnapshot { t, phi: zero.clone(), phi_dot: zero.clone() })
            .collect();
        let n = weighted_trajectory_norm(&o, &traj, &p).unwrap();
        assert_eq!(n.c_meas, 0.0);
        assert!(n.weighted.iter().all(|&w| w == 0.0));
        assert!(weighted_trajectory_norm(&o, &traj[..1], &p).is_err());

        let sym = BilaplacianSymbol::build(&o, &SmallMatrix::identity(1)).unwrap();
        let x = ScalarField::from_modes(*o.lattice(), &[Mode::cos([1, 0], 1e-4), Mode::sin([3, 1], 2e-5)]).unwrap();
        let lin = |scale: f64| {
            let x = x.scaled(scale);
            let traj: Vec<TrajectorySnapshot<f64>> = (0..10)
                .map(|i| {
                    let t = i as f64 * 1e-3;
                    let phi = sym.semigroup_apply(&o, &x, t).unwrap();
                    let phi_dot = sym.apply_operator(&o, &phi).unwrap().scaled(-1.0);
                    TrajectorySnapshot { t, phi, phi_dot }
                })
                .collect();
            weighted_trajectory_norm(&o, &traj, &p).unwrap().c_meas
        };
        let (a, b) = (lin(1.0), lin(2.0));
        assert!(a > 0.0 && a.is_finite());
        assert!((a - b).abs() < 1e-9 * a);
    }
}
