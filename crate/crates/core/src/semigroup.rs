//! Exact Fourier realization of `e^{−tA}`, `A = Δ₀²`, and the one-point Duhamel operator.

use num_complex::Complex;
use rayon::prelude::*;

use crate::curvature::up;
use crate::error::{CalabiError, Result};
use crate::lattice::{ScalarField, SpectralCoeffs, TorusLattice};
use crate::linalg::SmallMatrix;
use crate::real::Real;
use crate::spectral::{SpectralOps, Wirtinger};

/// Below this `z = τλ` the coefficient `(1 − e^{−z})/λ` is evaluated by its series.
pub const PHI1_SERIES_THRESHOLD: f64 = 1e-5;
/// Number of points on the logarithmic ladder used by [`BilaplacianSymbol::smoothing_constant`].
pub const SMOOTHING_LADDER_POINTS: usize = 32;

/// Per-slot eigenvalues `λ(k) = σ(k)²` of `Δ₀²`, with `σ` the symbol of `Δ₀ = g0^{i j̄}∂_i∂_j̄`.
#[derive(Debug, Clone)]
pub struct BilaplacianSymbol<T> {
    lattice: TorusLattice<T>,
    sigma: Vec<T>,
    lambda: Vec<T>,
    lambda_min_pos: T,
    lambda_max: T,
}

/// `(1 − e^{−τλ})/λ`, equal to `τ` at `λ = 0`.
pub fn phi1_coefficient<T: Real>(lambda: T, tau: T) -> T {
    let z = tau * lambda;
    if z < T::lit(PHI1_SERIES_THRESHOLD) {
        // τ(1 − z/2 + z²/6 − z³/24); truncation below 1e-21 relative
        tau * (T::one() - z / T::lit(2.0) + z * z / T::lit(6.0) - z * z * z / T::lit(24.0))
    } else {
        -(-z).exp_m1() / lambda
    }
}

impl<T: Real> BilaplacianSymbol<T> {
    pub fn build(ops: &SpectralOps<T>, g0: &SmallMatrix<T>) -> Result<Self> {
        let lattice = *ops.lattice();
        let n = lattice.n();
        if g0.dim() != n {
            return Err(CalabiError::LatticeMismatch);
        }
        if g0.hermitian_defect() > T::lit(1e-12) {
            return Err(CalabiError::InvalidMetric { min_eig: f64::NAN });
        }
        let (lo, _) = g0.hermitian_eigenvalues();
        if !(lo > T::zero()) {
            return Err(CalabiError::InvalidMetric { min_eig: lo.to_f64_lossy() });
        }
        let inv = g0.inverse().ok_or(CalabiError::InvalidMetric { min_eig: lo.to_f64_lossy() })?;
        let mut sigma = vec![Complex::new(T::zero(), T::zero()); lattice.len()];
        for i in 0..n {
            for j in 0..n {
                let s = ops.symbol(&[Wirtinger::Dz(i), Wirtinger::Dzbar(j)])?;
                let c = up(&inv, i, j);
                sigma.par_iter_mut().zip(s.par_iter()).for_each(|(acc, v)| *acc = *acc + c * *v);
            }
        }
        let sigma: Vec<T> = sigma.into_iter().map(|c| c.re).collect();
        let lambda: Vec<T> = sigma.iter().map(|&s| s * s).collect();
        let lambda_max = lambda.iter().fold(T::zero(), |m, &l| m.max(l));
        let lambda_min_pos = lambda
            .iter()
            .skip(1)
            .fold(T::infinity(), |m, &l| if l > T::zero() { m.min(l) } else { m });
        Ok(Self { lattice, sigma, lambda, lambda_min_pos, lambda_max })
    }

    pub fn lattice(&self) -> &TorusLattice<T> {
        &self.lattice
    }

    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    /// Symbol of `Δ₀` itself (non-positive).
    pub fn laplacian_symbol(&self) -> &[T] {
        &self.sigma
    }

    pub fn lambda_min_positive(&self) -> T {
        self.lambda_min_pos
    }

    pub fn lambda_max(&self) -> T {
        self.lambda_max
    }

    fn check(&self, x: &ScalarField<T>) -> Result<()> {
        if x.lattice() != &self.lattice {
            return Err(CalabiError::LatticeMismatch);
        }
        Ok(())
    }

    fn scale_coeffs(&self, c: &SpectralCoeffs<T>, f: impl Fn(T) -> T + Sync) -> SpectralCoeffs<T> {
        let out = c
            .coeffs()
            .par_iter()
            .zip(self.lambda.par_iter())
            .map(|(a, &l)| *a * f(l))
            .collect();
        SpectralCoeffs::new(self.lattice, out)
    }

    /// `A x = Δ₀² x`.
    pub fn apply_operator(&self, ops: &SpectralOps<T>, x: &ScalarField<T>) -> Result<ScalarField<T>> {
        self.check(x)?;
        Ok(ops.inverse_real(&self.scale_coeffs(&ops.forward(x), |l| l)))
    }

    pub fn semigroup_coeffs(&self, c: &SpectralCoeffs<T>, t: T) -> SpectralCoeffs<T> {
        self.scale_coeffs(c, |l| (-t * l).exp())
    }

    pub fn phi1_coeffs(&self, c: &SpectralCoeffs<T>, tau: T) -> SpectralCoeffs<T> {
        self.scale_coeffs(c, |l| phi1_coefficient(l, tau))
    }

    /// `e^{−tA} x`.
    pub fn semigroup_apply(&self, ops: &SpectralOps<T>, x: &ScalarField<T>, t: T) -> Result<ScalarField<T>> {
        self.check(x)?;
        if !(t >= T::zero()) {
            return Err(CalabiError::NegativeTime(t.to_f64_lossy()));
        }
        if t == T::zero() {
            return Ok(x.clone());
        }
        Ok(ops.inverse_real(&self.semigroup_coeffs(&ops.forward(x), t)))
    }

    /// `∫₀^τ e^{−(τ−s)A} f ds` for time-constant `f`.
    pub fn duhamel_phi1(&self, ops: &SpectralOps<T>, f: &ScalarField<T>, tau: T) -> Result<ScalarField<T>> {
        self.check(f)?;
        if !(tau > T::zero()) {
            return Err(CalabiError::NonPositiveStep(tau.to_f64_lossy()));
        }
        Ok(ops.inverse_real(&self.phi1_coeffs(&ops.forward(f), tau)))
    }

    /// The ladder `s_m`, log-spaced over `[1/λ_max, 10/λ_min⁺]`.
    pub fn smoothing_ladder(&self) -> Vec<T> {
        let lo = (T::one() / self.lambda_max).ln();
        let hi = (T::lit(10.0) / self.lambda_min_pos).ln();
        let last = T::from_usize_lossy(SMOOTHING_LADDER_POINTS - 1);
        (0..SMOOTHING_LADDER_POINTS)
            .map(|m| (lo + (hi - lo) * T::from_usize_lossy(m) / last).exp())
            .collect()
    }

    /// `max_s s^{1/2} ‖A e^{−sA} x‖∞` over [`Self::smoothing_ladder`].
    pub fn smoothing_constant(&self, ops: &SpectralOps<T>, x: &ScalarField<T>) -> Result<T> {
        self.check(x)?;
        let c = ops.forward(x);
        Ok(self.smoothing_ladder().into_iter().fold(T::zero(), |best, s| {
            let y = ops.inverse_real(&self.scale_coeffs(&c, |l| l * (-s * l).exp()));
            best.max(s.sqrt() * y.sup_norm())
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Mode;
    use std::f64::consts::PI;

    fn ops1(size: usize) -> SpectralOps<f64> {
        SpectralOps::new(TorusLattice::new(1, size, 1.0).unwrap())
    }

    fn cos_field(ops: &SpectralOps<f64>, k: [i64; 2], a: f64) -> ScalarField<f64> {
        ScalarField::from_modes(*ops.lattice(), &[Mode::cos(k, a)]).unwrap()
    }

    fn max_diff(a: &ScalarField<f64>, b: &ScalarField<f64>) -> f64 {
        (a - b).sup_norm()
    }

    #[test]
    fn symbol_of_unit_mode() {
        let ops = ops1(16);
        let sym = BilaplacianSymbol::build(&ops, &SmallMatrix::identity(1)).unwrap();
        let slot = ops.lattice().frequency_slot(&[1, 0]).unwrap();
        assert!((sym.lambda()[slot] - PI.powi(4)).abs() < 1e-10);
        assert_eq!(sym.lambda()[0], 0.0);
        assert!(sym.lambda().iter().skip(1).all(|&l| l > 0.0));
        for s in 0..ops.lattice().len() {
            assert_eq!(sym.lambda()[s], sym.lambda()[ops.lattice().negated_slot(s)]);
        }
    }

    #[test]
    fn symbol_scales_with_metric() {
        let ops = SpectralOps::new(TorusLattice::new(2, 8, 1.0).unwrap());
        let g0 = SmallMatrix::hermitian2(1.3, Complex::new(0.2, -0.1), 0.8);
        let a: BilaplacianSymbol<f64> = BilaplacianSymbol::build(&ops, &g0).unwrap();
        let b = BilaplacianSymbol::build(&ops, &g0.scale(2.0)).unwrap();
        for (x, y) in a.lambda().iter().zip(b.lambda()) {
            assert!((x / 4.0 - y).abs() <= 1e-12 * x.max(1.0));
        }
        assert!(a.lambda().iter().skip(1).all(|&l| l > 0.0));
    }

    #[test]
    fn rejects_non_pd_metric() {
        let ops = ops1(8);
        assert!(BilaplacianSymbol::build(&ops, &SmallMatrix::scalar(1, -1.0)).is_err());
    }

    #[test]
    fn semigroup_on_mode_and_constant() {
        let ops = ops1(16);
        let sym = BilaplacianSymbol::build(&ops, &SmallMatrix::identity(1)).unwrap();
        let c = ScalarField::constant(*ops.lattice(), 2.5);
        assert!(max_diff(&sym.semigroup_apply(&ops, &c, 3.0).unwrap(), &c) < 1e-14);
        let x = cos_field(&ops, [1, 0], 1.0);
        let t = 0.01;
        let y = sym.semigroup_apply(&ops, &x, t).unwrap();
        assert!(max_diff(&y, &x.scaled((-PI.powi(4) * t).exp())) < 1e-14);
        assert!(max_diff(&sym.semigroup_apply(&ops, &x, 0.0).unwrap(), &x) == 0.0);
        assert!(sym.semigroup_apply(&ops, &x, -1.0).is_err());
    }

    #[test]
    fn semigroup_law() {
        let ops = SpectralOps::new(TorusLattice::new(2, 8, 1.0).unwrap());
        let sym = BilaplacianSymbol::build(&ops, &SmallMatrix::identity(2)).unwrap();
        let x = ScalarField::from_modes(*ops.lattice(), &[Mode::cos([1, 0, 1, 1], 1.0), Mode::sin([0, 2, 0, 1], 0.5)]).unwrap();
        let (s, t) = (1e-3, 2.5e-3);
        let ab = sym.semigroup_apply(&ops, &sym.semigroup_apply(&ops, &x, t).unwrap(), s).unwrap();
        let direct = sym.semigroup_apply(&ops, &x, s + t).unwrap();
        assert!(max_diff(&ab, &direct) < 1e-13);
    }

    #[test]
    fn modes_contract_in_time() {
        let ops = ops1(16);
        let sym = BilaplacianSymbol::build(&ops, &SmallMatrix::identity(1)).unwrap();
        let x = ScalarField::from_modes(*ops.lattice(), &[Mode::cos([1, 2], 1.0), Mode::sin([3, 0], 0.3)]).unwrap();
        let c = ops.forward(&x);
        let mut prev: Vec<f64> = c.coeffs().iter().map(|z| z.norm()).collect();
        for t in [1e-4, 1e-3, 1e-2] {
            let cur: Vec<f64> = sym.semigroup_coeffs(&c, t).coeffs().iter().map(|z| z.norm()).collect();
            assert!(cur.iter().zip(&prev).all(|(a, b)| a <= b));
            prev = cur;
        }
    }

    #[test]
    fn strong_continuity_first_order() {
        let ops = ops1(16);
        let sym = BilaplacianSymbol::build(&ops, &SmallMatrix::identity(1)).unwrap();
        let x = ScalarField::from_modes(*ops.lattice(), &[Mode::cos([1, 0], 1.0), Mode::sin([2, 1], 0.2)]).unwrap();
        let gap = |t: f64| max_diff(&sym.semigroup_apply(&ops, &x, t).unwrap(), &x);
        let lat = *ops.lattice();
        let lam = sym.lambda()[lat.frequency_slot(&[2, 1]).unwrap()];
        // per mode g(t/2)/g(t) = 1/(1 + e^{−λt/2}) ∈ [1/2, 1/2 + λt/8]
        let mut t = 1e-5;
        let mut prev = gap(t);
        for _ in 0..6 {
            let g = gap(t / 2.0);
            let ratio = g / prev;
            assert!(ratio >= 0.5 - 1e-9 && ratio <= 0.5 + lam * t / 8.0 + 1e-9, "t={t}: {ratio}");
            t /= 2.0;
            prev = g;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn phi1_coefficient_matches_simpson_oracle() {
        let simpson = |lambda: f64, tau: f64| {
            let m = 10_000usize;
            let h = tau / m as f64;
            let f = |s: f64| (-(tau - s) * lambda).exp();
            let mut acc = f(0.0) + f(tau);
            for i in 1..m {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
            }
            acc * h / 3.0
        };
        for (lambda, tau) in [(PI.powi(4), 0.01), (PI.powi(4) * 16.0, 0.003), (1e-3, 0.5), (50.0, 1e-8)] {
            let got = phi1_coefficient(lambda, tau);
            let want = simpson(lambda, tau);
            assert!(((got - want) / want).abs() < 1e-10, "λ={lambda} τ={tau}: {got} vs {want}");
        }
    }

    #[test]
    fn phi1_small_argument_limit() {
        assert_eq!(phi1_coefficient(0.0, 0.25), 0.25);
        let (lambda, tau): (f64, f64) = (1e-3, 1e-4);
        let got = phi1_coefficient(lambda, tau);
        assert!((got - tau * (1.0 - tau * lambda / 2.0)).abs() < tau * (tau * lambda).powi(2));
        // branches agree across the threshold
        let z = PHI1_SERIES_THRESHOLD;
        let zb = z * (1.0 - 1e-9);
        let below = phi1_coefficient(zb, 1.0);
        let above = -(-zb).exp_m1() / zb;
        assert!((below - above).abs() < 1e-15);
    }

    #[test]
    fn duhamel_on_constant_and_mode() {
        let ops = ops1(16);
        let sym = BilaplacianSymbol::build(&ops, &SmallMatrix::identity(1)).unwrap();
        let c = ScalarField::constant(*ops.lattice(), 3.0);
        let tau = 0.02;
        let k = sym.duhamel_phi1(&ops, &c, tau).unwrap();
        assert!(k.values().iter().all(|v| (v - 3.0 * tau).abs() < 1e-14));
        let x = cos_field(&ops, [1, 0], 1.0);
        let y = sym.duhamel_phi1(&ops, &x, tau).unwrap();
        let l = PI.powi(4);
        assert!(max_diff(&y, &x.scaled((1.0 - (-tau * l).exp()) / l)) < 1e-14);
        assert!(sym.duhamel_phi1(&ops, &x, 0.0).is_err());
    }

    #[test]
    fn smoothing_constant_properties() {
        let ops = ops1(16);
        let sym = BilaplacianSymbol::build(&ops, &SmallMatrix::identity(1)).unwrap();
        let zero = ScalarField::zeros(*ops.lattice());
        assert_eq!(sym.smoothing_constant(&ops, &zero).unwrap(), 0.0);
        let a = 0.7;
        let x = cos_field(&ops, [1, 0], a);
        let l: f64 = PI.powi(4);
        let got = sym.smoothing_constant(&ops, &x).unwrap();
        let cap = a * l.sqrt() * 0.5f64.sqrt() * (-0.5f64).exp();
        let ladder_best = sym
            .smoothing_ladder()
            .iter()
            .map(|&s| a * l.sqrt() * (s * l).sqrt() * (-s * l).exp())
            .fold(0.0, f64::max);
        assert!(got <= cap * (1.0 + 1e-12));
        assert!((got - ladder_best).abs() < 1e-12 * cap);
        let scaled = sym.smoothing_constant(&ops, &x.scaled(-3.0)).unwrap();
        assert!((scaled - 3.0 * got).abs() < 1e-12 * got);
        assert_eq!(sym.smoothing_ladder().len(), SMOOTHING_LADDER_POINTS);
    }

    #[test]
    fn lambda_matches_finite_difference_bilaplacian() {
        // Δ₀ = ¼(∂x² + ∂y²); second-order stencil applied twice to mode k
        let rel_err = |size: usize| {
            let ops = ops1(size);
            let sym = BilaplacianSymbol::build(&ops, &SmallMatrix::identity(1)).unwrap();
            let lat = *ops.lattice();
            let x = cos_field(&ops, [1, 1], 1.0);
            let h = lat.spacing();
            let lap = |f: &ScalarField<f64>| {
                ScalarField::from_values(
                    lat,
                    (0..lat.len())
                        .map(|p| {
                            let m = lat.multi_index(p);
                            let at = |dx: isize, dy: isize| {
                                let i = (m[0] as isize + dx).rem_euclid(size as isize) as usize;
                                let j = (m[1] as isize + dy).rem_euclid(size as isize) as usize;
                                f.values()[lat.flat_index(&[i, j])]
                            };
                            0.25 * (at(1, 0) + at(-1, 0) + at(0, 1) + at(0, -1) - 4.0 * at(0, 0)) / (h * h)
                        })
                        .collect(),
                )
                .unwrap()
            };
            let fd = lap(&lap(&x));
            let slot = lat.frequency_slot(&[1, 1]).unwrap();
            let exact = x.scaled(sym.lambda()[slot]);
            max_diff(&fd, &exact) / exact.sup_norm()
        };
        let (e16, e32) = (rel_err(16), rel_err(32));
        assert!(e16 < 0.2);
        assert!((e16 / e32 - 4.0).abs() < 0.2, "{e16} {e32}");
    }
}
