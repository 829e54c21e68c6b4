//! Periodic grids on the flat torus `C^n / (L Z)^{2n}` and the fields that live on them.
//!
//! Real axes are ordered `(x¹, y¹, x², y²)` with `z^j = x^j + i y^j`. Grid values are
//! stored row-major, axis 0 varying slowest. Spectral coefficients use the same
//! layout over frequency indices in wrap-around order (`0, 1, .., N/2, -N/2+1, .., -1`),
//! so the Nyquist frequency is carried as `+N/2`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{CalabiError, Result};
use crate::real::Real;

/// Largest real dimension supported (`n = 2`).
pub const MAX_AXES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusLattice<T> {
    n: usize,
    size: usize,
    period: T,
}

impl<T: Real> TorusLattice<T> {
    pub fn new(n: usize, size: usize, period: T) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(CalabiError::InvalidLattice(format!(
                "complex dimension must be 1 or 2, got {n}"
            )));
        }
        if size < 8 || !size.is_power_of_two() {
            return Err(CalabiError::InvalidLattice(format!(
                "grid size N must be a power of two and at least 8, got {size}"
            )));
        }
        if !(period > T::zero()) || !period.is_finite() {
            return Err(CalabiError::InvalidLattice(format!(
                "period L must be positive and finite, got {period}"
            )));
        }
        Ok(Self { n, size, period })
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid points per real axis.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    /// Total number of grid points, `N^{2n}`.
    pub fn len(&self) -> usize {
        self.size.pow(self.real_dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        self.period / T::from_usize_lossy(self.size)
    }

    /// Volume of one grid cell, `(L/N)^{2n}`.
    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.real_dim() as i32)
    }

    /// Total coordinate volume `L^{2n}`.
    pub fn total_volume(&self) -> T {
        self.period.powi(self.real_dim() as i32)
    }

    /// Stride of `axis` in the row-major layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.size.pow((self.real_dim() - 1 - axis) as u32)
    }

    pub fn multi_index(&self, mut flat: usize) -> [usize; MAX_AXES] {
        let d = self.real_dim();
        let mut out = [0; MAX_AXES];
        for axis in (0..d).rev() {
            out[axis] = flat % self.size;
            flat /= self.size;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi[..self.real_dim()]
            .iter()
            .fold(0, |acc, &i| acc * self.size + i)
    }

    /// Grid coordinates of a point, in the axis order `(x¹, y¹, x², y²)`.
    pub fn coordinates(&self, flat: usize) -> [T; MAX_AXES] {
        let h = self.spacing();
        let m = self.multi_index(flat);
        let mut out = [T::zero(); MAX_AXES];
        for axis in 0..self.real_dim() {
            out[axis] = h * T::from_usize_lossy(m[axis]);
        }
        out
    }

    /// Signed wavenumber of frequency index `j`, in `(-N/2, N/2]`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let half = self.size / 2;
        if j <= half {
            j as i64
        } else {
            j as i64 - self.size as i64
        }
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.size / 2
    }

    /// Frequency vector of spectral slot `flat`.
    pub fn frequency(&self, flat: usize) -> [i64; MAX_AXES] {
        let m = self.multi_index(flat);
        let mut out = [0; MAX_AXES];
        for axis in 0..self.real_dim() {
            out[axis] = self.wavenumber(m[axis]);
        }
        out
    }

    /// Spectral slot holding frequency `k`, if every component lies in `(-N/2, N/2]`.
    pub fn frequency_slot(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.real_dim() {
            return None;
        }
        let half = (self.size / 2) as i64;
        let mut multi = [0usize; MAX_AXES];
        for (axis, &ka) in k.iter().enumerate() {
            if ka <= -half || ka > half {
                return None;
            }
            multi[axis] = ka.rem_euclid(self.size as i64) as usize;
        }
        Some(self.flat_index(&multi))
    }

    /// Slot of `-k` for the frequency stored at `flat` (Nyquist components map to themselves).
    pub fn negated_slot(&self, flat: usize) -> usize {
        let m = self.multi_index(flat);
        let mut neg = [0usize; MAX_AXES];
        for axis in 0..self.real_dim() {
            neg[axis] = (self.size - m[axis]) % self.size;
        }
        self.flat_index(&neg)
    }

    pub fn with_size(&self, size: usize) -> Result<Self> {
        Self::new(self.n, size, self.period)
    }
}

/// One Fourier term `amplitude · cos(2π k·x / L + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub k: Vec<i64>,
    pub amplitude: f64,
    pub phase: f64,
}

impl Mode {
    pub fn new(k: impl Into<Vec<i64>>, amplitude: f64, phase: f64) -> Self {
        Self {
            k: k.into(),
            amplitude,
            phase,
        }
    }

    pub fn cos(k: impl Into<Vec<i64>>, amplitude: f64) -> Self {
        Self::new(k, amplitude, 0.0)
    }

    pub fn sin(k: impl Into<Vec<i64>>, amplitude: f64) -> Self {
        Self::new(k, amplitude, -std::f64::consts::FRAC_PI_2)
    }
}

/// Real grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    lattice: TorusLattice<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(lattice: TorusLattice<T>) -> Self {
        Self::constant(lattice, T::zero())
    }

    pub fn constant(lattice: TorusLattice<T>, c: T) -> Self {
        Self {
            lattice,
            values: vec![c; lattice.len()],
        }
    }

    pub fn from_values(lattice: TorusLattice<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(CalabiError::InvalidLattice(format!(
                "expected {} values, got {}",
                lattice.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CalabiError::InvalidLattice(format!(
                "non-finite value at grid index {i}"
            )));
        }
        Ok(Self { lattice, values })
    }

    /// Samples `f` at every grid point; `f` receives the coordinates `(x¹, y¹[, x², y²])`.
    pub fn from_fn(lattice: TorusLattice<T>, f: impl Fn(&[T]) -> T + Sync) -> Self {
        let d = lattice.real_dim();
        let values = (0..lattice.len())
            .into_par_iter()
            .map(|p| f(&lattice.coordinates(p)[..d]))
            .collect();
        Self { lattice, values }
    }

    /// Sum of cosine modes. Frequencies must have `2n` components.
    pub fn from_modes(lattice: TorusLattice<T>, modes: &[Mode]) -> Result<Self> {
        for m in modes {
            if lattice.frequency_slot(&m.k).is_none() {
                return Err(CalabiError::InvalidLattice(format!(
                    "mode frequency {:?} outside (-N/2, N/2]^{} for N = {}",
                    m.k,
                    lattice.real_dim(),
                    lattice.size()
                )));
            }
        }
        let two_pi_over_l = T::TAU() / lattice.period();
        let terms: Vec<(Vec<T>, T, T)> = modes
            .iter()
            .map(|m| {
                (
                    m.k.iter().map(|&k| T::lit(k as f64)).collect(),
                    T::lit(m.amplitude),
                    T::lit(m.phase),
                )
            })
            .collect();
        Ok(Self::from_fn(lattice, |x| {
            terms.iter().fold(T::zero(), |acc, (k, a, ph)| {
                let arg = k.iter().zip(x).fold(T::zero(), |s, (&ki, &xi)| s + ki * xi);
                acc + *a * (two_pi_over_l * arg + *ph).cos()
            })
        }))
    }

    pub fn lattice(&self) -> &TorusLattice<T> {
        &self.lattice
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Plain grid sum of squares `Σ f²`.
    pub fn sum_squares(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::from_usize_lossy(self.values.len())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T + Sync) -> Self {
        Self {
            lattice: self.lattice,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T + Sync) -> Self {
        debug_assert_eq!(self.lattice, other.lattice);
        Self {
            lattice: self.lattice,
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|v| c * v)
    }

    /// Field with its mean removed.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }
}

impl<T: Real> Add for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn add(self, rhs: Self) -> ScalarField<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn sub(self, rhs: Self) -> ScalarField<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Real> Mul<T> for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn mul(self, c: T) -> ScalarField<T> {
        self.scaled(c)
    }
}

impl<T: Real> Neg for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn neg(self) -> ScalarField<T> {
        self.map(|v| -v)
    }
}

/// Complex grid function; derivative outputs of real fields land here.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField<T> {
    lattice: TorusLattice<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> ComplexField<T> {
    pub fn new(lattice: TorusLattice<T>, values: Vec<Complex<T>>) -> Self {
        assert_eq!(values.len(), lattice.len(), "value count must match lattice");
        Self { lattice, values }
    }

    pub fn from_real(f: &ScalarField<T>) -> Self {
        Self {
            lattice: *f.lattice(),
            values: f.values().iter().map(|&v| Complex::new(v, T::zero())).collect(),
        }
    }

    pub fn lattice(&self) -> &TorusLattice<T> {
        &self.lattice
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn re(&self) -> ScalarField<T> {
        ScalarField {
            lattice: self.lattice,
            values: self.values.iter().map(|c| c.re).collect(),
        }
    }

    pub fn im(&self) -> ScalarField<T> {
        ScalarField {
            lattice: self.lattice,
            values: self.values.iter().map(|c| c.im).collect(),
        }
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn max_abs_im(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.im.abs()))
    }
}

/// Fourier coefficients with `f(x) = Σ_k c(k) exp(2πi k·x / L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs<T> {
    lattice: TorusLattice<T>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralCoeffs<T> {
    pub fn new(lattice: TorusLattice<T>, coeffs: Vec<Complex<T>>) -> Self {
        assert_eq!(coeffs.len(), lattice.len(), "coefficient count must match lattice");
        Self { lattice, coeffs }
    }

    pub fn lattice(&self) -> &TorusLattice<T> {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    /// Coefficient of frequency `k`; zero when `k` is outside the resolved band.
    pub fn get(&self, k: &[i64]) -> Complex<T> {
        self.lattice
            .frequency_slot(k)
            .map(|s| self.coeffs[s])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// `max_k |c(-k) - conj(c(k))| / max_k |c(k)|`; zero for coefficients of a real field.
    pub fn hermitian_defect(&self) -> T {
        let scale = self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
        if scale == T::zero() {
            return T::zero();
        }
        let worst = (0..self.coeffs.len()).fold(T::zero(), |m, s| {
            let neg = self.coeffs[self.lattice.negated_slot(s)];
            m.max((neg - self.coeffs[s].conj()).norm())
        });
        worst / scale
    }

    /// `Σ_k |c(k)|²`.
    pub fn energy(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}
