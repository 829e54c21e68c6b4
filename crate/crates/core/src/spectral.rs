//! Fourier transforms on the torus grid and exact spectral Wirtinger derivatives.
//!
//! `∂_j = ½(∂_{x^j} − i∂_{y^j})` and `∂_j̄ = ½(∂_{x^j} + i∂_{y^j})` are expanded into
//! real partial derivatives, each carrying the symbol `(2πi k_a / L)^{m_a}` per axis.
//! An odd power on a Nyquist frequency gets symbol zero; even powers keep the exact
//! value. This keeps derivatives of real fields Hermitian-symmetric and makes all
//! mixed derivatives commute exactly.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{CalabiError, Result};
use crate::lattice::{ComplexField, ScalarField, SpectralCoeffs, TorusLattice, MAX_AXES};
use crate::metric::HermitianMetricField;
use crate::real::Real;

/// Highest derivative order handled by [`SpectralOps::derivative`].
pub const MAX_ORDER: usize = 4;

/// One Wirtinger derivative, 0-based complex coordinate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wirtinger {
    /// `∂/∂z^j`
    Dz(usize),
    /// `∂/∂z̄^j`
    Dzbar(usize),
}

/// Real multi-index over the axes `(x¹, y¹, x², y²)`.
pub type MultiIndex = [u8; MAX_AXES];

/// Expansion of a Wirtinger monomial into real partial derivatives.
fn expand(ops: &[Wirtinger]) -> Vec<(MultiIndex, Complex<f64>)> {
    let mut terms: Vec<(MultiIndex, Complex<f64>)> = vec![([0; MAX_AXES], Complex::new(1.0, 0.0))];
    for op in ops {
        let (j, sign) = match *op {
            Wirtinger::Dz(j) => (j, -1.0),
            Wirtinger::Dzbar(j) => (j, 1.0),
        };
        let mut next: Vec<(MultiIndex, Complex<f64>)> = Vec::with_capacity(terms.len() * 2);
        for (alpha, c) in &terms {
            for (axis, factor) in [(2 * j, Complex::new(0.5, 0.0)), (2 * j + 1, Complex::new(0.0, 0.5 * sign))] {
                let mut a = *alpha;
                a[axis] += 1;
                let coeff = *c * factor;
                match next.iter_mut().find(|(b, _)| *b == a) {
                    Some((_, acc)) => *acc += coeff,
                    None => next.push((a, coeff)),
                }
            }
        }
        terms = next;
    }
    terms.retain(|(_, c)| c.norm() > 0.0);
    terms
}

pub struct SpectralOps<T: Real> {
    lattice: TorusLattice<T>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    /// `(2πi k/L)^m` per frequency index and power `m ≤ 4`, Nyquist odd powers zeroed.
    powers: Vec<[Complex<T>; MAX_ORDER + 1]>,
    dealias: bool,
}

impl<T: Real> Clone for SpectralOps<T> {
    fn clone(&self) -> Self {
        Self {
            lattice: self.lattice,
            fwd: Arc::clone(&self.fwd),
            inv: Arc::clone(&self.inv),
            powers: self.powers.clone(),
            dealias: self.dealias,
        }
    }
}

impl<T: Real> fmt::Debug for SpectralOps<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralOps")
            .field("lattice", &self.lattice)
            .field("dealias", &self.dealias)
            .finish()
    }
}

impl<T: Real> SpectralOps<T> {
    pub fn new(lattice: TorusLattice<T>) -> Self {
        let mut planner = FftPlanner::new();
        let n = lattice.size();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let two_pi_over_l = T::TAU() / lattice.period();
        let powers = (0..n)
            .map(|j| {
                let ik = Complex::new(T::zero(), two_pi_over_l * T::lit(lattice.wavenumber(j) as f64));
                let mut row = [Complex::new(T::one(), T::zero()); MAX_ORDER + 1];
                for m in 1..=MAX_ORDER {
                    row[m] = if lattice.is_nyquist(j) && m % 2 == 1 {
                        Complex::new(T::zero(), T::zero())
                    } else {
                        row[m - 1] * ik
                    };
                }
                // even powers at Nyquist: rebuild from the true wavenumber
                if lattice.is_nyquist(j) {
                    let k2 = -(two_pi_over_l * T::lit(lattice.wavenumber(j) as f64)).powi(2);
                    row[2] = Complex::new(k2, T::zero());
                    row[4] = Complex::new(k2 * k2, T::zero());
                }
                row
            })
            .collect();
        Self {
            lattice,
            fwd,
            inv,
            powers,
            dealias: false,
        }
    }

    /// Enables 2/3-rule truncation of the nonlinear terms evaluated by the flow.
    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn lattice(&self) -> &TorusLattice<T> {
        &self.lattice
    }

    fn transform(&self, data: &mut [Complex<T>], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let n = self.lattice.size();
        let scratch_len = plan.get_inplace_scratch_len();
        for axis in 0..self.lattice.real_dim() {
            let s = self.lattice.stride(axis);
            if s == 1 {
                data.par_chunks_mut(n).for_each_init(
                    || vec![Complex::new(T::zero(), T::zero()); scratch_len],
                    |scratch, line| plan.process_with_scratch(line, scratch),
                );
                continue;
            }
            let block = s * n;
            let src: &[Complex<T>] = data;
            let mut lines = vec![Complex::new(T::zero(), T::zero()); src.len()];
            lines.par_chunks_mut(n).enumerate().for_each_init(
                || vec![Complex::new(T::zero(), T::zero()); scratch_len],
                |scratch, (l, line)| {
                    let (o, r) = (l / s, l % s);
                    let base = o * block + r;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = src[base + j * s];
                    }
                    plan.process_with_scratch(line, scratch);
                },
            );
            data.par_iter_mut().enumerate().for_each(|(idx, v)| {
                let (o, rem) = (idx / block, idx % block);
                let (j, r) = (rem / s, rem % s);
                *v = lines[(o * s + r) * n + j];
            });
        }
    }

    pub fn forward(&self, f: &ScalarField<T>) -> SpectralCoeffs<T> {
        let mut data: Vec<Complex<T>> =
            f.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.forward_in_place(&mut data);
        SpectralCoeffs::new(self.lattice, data)
    }

    pub fn forward_complex(&self, f: &ComplexField<T>) -> SpectralCoeffs<T> {
        let mut data = f.values().to_vec();
        self.forward_in_place(&mut data);
        SpectralCoeffs::new(self.lattice, data)
    }

    fn forward_in_place(&self, data: &mut [Complex<T>]) {
        self.transform(data, false);
        let scale = T::one() / T::from_usize_lossy(data.len());
        data.par_iter_mut().for_each(|c| *c = *c * scale);
    }

    pub fn inverse(&self, c: &SpectralCoeffs<T>) -> ComplexField<T> {
        let mut data = c.coeffs().to_vec();
        self.transform(&mut data, true);
        ComplexField::new(self.lattice, data)
    }

    /// Real part of the inverse transform.
    pub fn inverse_real(&self, c: &SpectralCoeffs<T>) -> ScalarField<T> {
        self.inverse(c).re()
    }

    /// Symbol of a real multi-index derivative at spectral slot `slot`.
    fn real_symbol_at(&self, alpha: &MultiIndex, slot: usize) -> Complex<T> {
        let m = self.lattice.multi_index(slot);
        let mut out = Complex::new(T::one(), T::zero());
        for axis in 0..self.lattice.real_dim() {
            out = out * self.powers[m[axis]][alpha[axis] as usize];
        }
        out
    }

    /// Per-slot multiplier of the Wirtinger monomial `ops`.
    pub fn symbol(&self, ops: &[Wirtinger]) -> Result<Vec<Complex<T>>> {
        self.check_ops(ops)?;
        let terms: Vec<(MultiIndex, Complex<T>)> = expand(ops)
            .into_iter()
            .map(|(a, c)| (a, Complex::new(T::lit(c.re), T::lit(c.im))))
            .collect();
        Ok((0..self.lattice.len())
            .into_par_iter()
            .map(|slot| {
                terms.iter().fold(Complex::new(T::zero(), T::zero()), |acc, (a, c)| {
                    acc + *c * self.real_symbol_at(a, slot)
                })
            })
            .collect())
    }

    fn check_ops(&self, ops: &[Wirtinger]) -> Result<()> {
        if ops.len() > MAX_ORDER {
            return Err(CalabiError::UnsupportedOrder(ops.len()));
        }
        let n = self.lattice.n();
        for op in ops {
            let (Wirtinger::Dz(j) | Wirtinger::Dzbar(j)) = *op;
            if j >= n {
                return Err(CalabiError::IndexOutOfRange { index: j, n });
            }
        }
        Ok(())
    }

    pub fn apply_multiplier(&self, c: &SpectralCoeffs<T>, mult: &[Complex<T>]) -> SpectralCoeffs<T> {
        let out = c
            .coeffs()
            .par_iter()
            .zip(mult.par_iter())
            .map(|(a, b)| *a * *b)
            .collect();
        SpectralCoeffs::new(self.lattice, out)
    }

    /// Applies the Wirtinger monomial `ops` (at most fourth order) to a field given
    /// by its coefficients.
    pub fn derivative(&self, c: &SpectralCoeffs<T>, ops: &[Wirtinger]) -> Result<ComplexField<T>> {
        let symbol = self.symbol(ops)?;
        Ok(self.inverse(&self.apply_multiplier(c, &symbol)))
    }

    /// Convenience form of [`Self::derivative`] for a real field.
    pub fn complex_derivative(&self, f: &ScalarField<T>, ops: &[Wirtinger]) -> Result<ComplexField<T>> {
        self.check_ops(ops)?;
        self.derivative(&self.forward(f), ops)
    }

    /// Real partial derivative `∂^alpha` of a field given by its coefficients.
    pub fn real_derivative(&self, c: &SpectralCoeffs<T>, alpha: &MultiIndex) -> Result<ScalarField<T>> {
        let order: usize = alpha.iter().map(|&a| a as usize).sum();
        if order > MAX_ORDER {
            return Err(CalabiError::UnsupportedOrder(order));
        }
        let mult: Vec<Complex<T>> = (0..self.lattice.len())
            .into_par_iter()
            .map(|slot| self.real_symbol_at(alpha, slot))
            .collect();
        Ok(self.inverse_real(&self.apply_multiplier(c, &mult)))
    }

    /// Pointwise matrix `∂_i ∂_j̄ φ`.
    pub fn dd_bar(&self, phi: &ScalarField<T>) -> HermitianMetricField<T> {
        self.dd_bar_coeffs(&self.forward(phi))
    }

    pub fn dd_bar_coeffs(&self, c: &SpectralCoeffs<T>) -> HermitianMetricField<T> {
        let n = self.lattice.n();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let d = self
                    .derivative(c, &[Wirtinger::Dz(i), Wirtinger::Dzbar(j)])
                    .expect("second-order derivative within range");
                entries.push(d.into_values());
            }
        }
        HermitianMetricField::from_entries(self.lattice, n, entries)
    }

    /// Zeroes every mode with some `|k_a| > N/3`.
    pub fn dealias_filter(&self, c: &mut SpectralCoeffs<T>) {
        let cutoff = (self.lattice.size() / 3) as i64;
        let lattice = self.lattice;
        let d = lattice.real_dim();
        c.coeffs_mut().par_iter_mut().enumerate().for_each(|(slot, v)| {
            let k = lattice.frequency(slot);
            if k[..d].iter().any(|ka| ka.abs() > cutoff) {
                *v = Complex::new(T::zero(), T::zero());
            }
        });
    }

    /// Applies the 2/3 filter to a real field when dealiasing is enabled.
    pub fn maybe_dealias(&self, f: ScalarField<T>) -> ScalarField<T> {
        if !self.dealias {
            return f;
        }
        let mut c = self.forward(&f);
        self.dealias_filter(&mut c);
        self.inverse_real(&c)
    }
}
