//! Pointwise 1×1 / 2×2 complex matrix algebra in closed form.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::real::Real;

/// `n × n` complex matrix with `n ∈ {1, 2}`; entry `(i, j)` holds `g_{i j̄}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallMatrix<T> {
    n: usize,
    a: [[Complex<T>; 2]; 2],
}

impl<T: Real> SmallMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        assert!(n == 1 || n == 2, "matrix dimension must be 1 or 2");
        let z = Complex::new(T::zero(), T::zero());
        Self { n, a: [[z; 2]; 2] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, T::one())
    }

    pub fn scalar(n: usize, c: T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = Complex::new(c, T::zero());
        }
        m
    }

    /// Hermitian matrix from its upper triangle: `[[a, b], [b̄, d]]`.
    pub fn hermitian2(a: T, b: Complex<T>, d: T) -> Self {
        let mut m = Self::zeros(2);
        m.a[0][0] = Complex::new(a, T::zero());
        m.a[0][1] = b;
        m.a[1][0] = b.conj();
        m.a[1][1] = Complex::new(d, T::zero());
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.a[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.a[i][j] = v;
    }

    pub fn det(&self) -> Complex<T> {
        match self.n {
            1 => self.a[0][0],
            _ => self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0],
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.n).fold(Complex::new(T::zero(), T::zero()), |s, i| s + self.a[i][i])
    }

    /// Matrix inverse via the adjugate; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det.norm() == T::zero() || !det.norm().is_finite() {
            return None;
        }
        let inv_det = det.inv();
        let mut out = Self::zeros(self.n);
        match self.n {
            1 => out.a[0][0] = inv_det,
            _ => {
                out.a[0][0] = self.a[1][1] * inv_det;
                out.a[1][1] = self.a[0][0] * inv_det;
                out.a[0][1] = -self.a[0][1] * inv_det;
                out.a[1][0] = -self.a[1][0] * inv_det;
            }
        }
        Some(out)
    }

    pub fn scale(&self, c: T) -> Self {
        let mut out = *self;
        for row in out.a.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * c;
            }
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.a[j][i].conj())
    }

    /// `max |a_ij − conj(a_ji)|` over all entries.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self.a[i][j] - self.a[j][i].conj()).norm());
            }
        }
        worst
    }

    /// Smallest and largest eigenvalue, treating the matrix as Hermitian.
    pub fn hermitian_eigenvalues(&self) -> (T, T) {
        match self.n {
            1 => (self.a[0][0].re, self.a[0][0].re),
            _ => {
                let two = T::lit(2.0);
                let (a, d) = (self.a[0][0].re, self.a[1][1].re);
                let b = (self.a[0][1] + self.a[1][0].conj()) / two;
                let mean = (a + d) / two;
                let radius = (((a - d) / two).powi(2) + b.norm_sqr()).sqrt();
                (mean - radius, mean + radius)
            }
        }
    }

    /// Extreme roots `μ` of `det(self − μ·h) = 0` for Hermitian `self` and Hermitian
    /// positive-definite `h`.
    pub fn generalized_eigenvalues(&self, h: &Self) -> (T, T) {
        match self.n {
            1 => {
                let mu = self.a[0][0].re / h.a[0][0].re;
                (mu, mu)
            }
            _ => {
                let two = T::lit(2.0);
                let det_g = self.det().re;
                let det_h = h.det().re;
                let cross = (self.a[0][1] * h.a[0][1].conj()).re;
                let b = self.a[0][0].re * h.a[1][1].re + self.a[1][1].re * h.a[0][0].re - two * cross;
                let disc = (b * b - T::lit(4.0) * det_h * det_g).max(T::zero()).sqrt();
                ((b - disc) / (two * det_h), (b + disc) / (two * det_h))
            }
        }
    }
}

impl<T: Real> Add for SmallMatrix<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(self.n, |i, j| self.a[i][j] + rhs.a[i][j])
    }
}

impl<T: Real> Sub for SmallMatrix<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(self.n, |i, j| self.a[i][j] - rhs.a[i][j])
    }
}

impl<T: Real> Mul for SmallMatrix<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(self.n, |i, j| {
            (0..self.n).fold(Complex::new(T::zero(), T::zero()), |s, k| s + self.a[i][k] * rhs.a[k][j])
        })
    }
}
