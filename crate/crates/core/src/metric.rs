//! Kähler metrics `g0 + ∂∂̄(ψ + φ)` on the torus grid: assembly, inverses,
//! positivity and two-sided bounds.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{CalabiError, Result};
use crate::lattice::{ComplexField, ScalarField, TorusLattice};
use crate::linalg::SmallMatrix;
use crate::real::Real;
use crate::spectral::SpectralOps;

/// Default threshold below which the smallest eigenvalue counts as degenerate.
pub const DEFAULT_PD_FLOOR: f64 = 1e-10;

/// Pointwise `n × n` complex matrix field. Entry `(i, j)` is `g_{i j̄}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMetricField<T> {
    lattice: TorusLattice<T>,
    n: usize,
    entries: Vec<Vec<Complex<T>>>,
}

impl<T: Real> HermitianMetricField<T> {
    pub fn from_entries(lattice: TorusLattice<T>, n: usize, entries: Vec<Vec<Complex<T>>>) -> Self {
        assert_eq!(n, lattice.n());
        assert_eq!(entries.len(), n * n);
        assert!(entries.iter().all(|e| e.len() == lattice.len()));
        Self { lattice, n, entries }
    }

    pub fn constant(lattice: TorusLattice<T>, m: &SmallMatrix<T>) -> Self {
        let n = lattice.n();
        assert_eq!(m.dim(), n);
        let entries = (0..n * n)
            .map(|e| vec![m.get(e / n, e % n); lattice.len()])
            .collect();
        Self { lattice, n, entries }
    }

    pub fn from_points(lattice: TorusLattice<T>, points: &[SmallMatrix<T>]) -> Self {
        let n = lattice.n();
        let entries = (0..n * n)
            .map(|e| points.iter().map(|m| m.get(e / n, e % n)).collect())
            .collect();
        Self { lattice, n, entries }
    }

    pub fn lattice(&self) -> &TorusLattice<T> {
        &self.lattice
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entry(&self, i: usize, j: usize) -> &[Complex<T>] {
        &self.entries[i * self.n + j]
    }

    pub fn entry_field(&self, i: usize, j: usize) -> ComplexField<T> {
        ComplexField::new(self.lattice, self.entry(i, j).to_vec())
    }

    #[inline]
    pub fn at(&self, p: usize) -> SmallMatrix<T> {
        SmallMatrix::from_fn(self.n, |i, j| self.entries[i * self.n + j][p])
    }

    pub fn points(&self) -> Vec<SmallMatrix<T>> {
        (0..self.len()).into_par_iter().map(|p| self.at(p)).collect()
    }

    pub fn map_points(&self, f: impl Fn(SmallMatrix<T>) -> SmallMatrix<T> + Sync) -> Self {
        let pts: Vec<_> = (0..self.len()).into_par_iter().map(|p| f(self.at(p))).collect();
        Self::from_points(self.lattice, &pts)
    }

    /// Worst pointwise violation of `g_{i j̄} = conj(g_{j ī})`.
    pub fn hermitian_defect(&self) -> T {
        (0..self.len())
            .into_par_iter()
            .map(|p| self.at(p).hermitian_defect())
            .reduce(T::zero, T::max)
    }

    pub fn add(&self, other: &Self) -> Self {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| *x + *y).collect())
            .collect();
        Self {
            lattice: self.lattice,
            n: self.n,
            entries,
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|a| a.iter().map(|x| *x * c).collect())
            .collect();
        Self {
            lattice: self.lattice,
            n: self.n,
            entries,
        }
    }

    /// Pointwise determinant (real part; exact for Hermitian input).
    pub fn det(&self) -> ScalarField<T> {
        let vals = (0..self.len()).into_par_iter().map(|p| self.at(p).det().re).collect();
        ScalarField::from_values(self.lattice, vals)
            .unwrap_or_else(|_| ScalarField::constant(self.lattice, T::nan()))
    }

    /// Largest entry-wise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.entries
            .iter()
            .zip(&other.entries)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (*x - *y).norm()))
            .fold(T::zero(), T::max)
    }
}

/// Reference Kähler metric `g = g0 + ∂∂̄ψ` fixing the class.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGeometry<T> {
    g0: SmallMatrix<T>,
    psi: ScalarField<T>,
}

impl<T: Real> ReferenceGeometry<T> {
    /// Validates that `g0` is Hermitian positive definite. Pointwise positivity of the
    /// full reference metric is checked by [`Self::metric`] callers via [`positivity_check`].
    pub fn new(g0: SmallMatrix<T>, psi: ScalarField<T>) -> Result<Self> {
        if g0.dim() != psi.lattice().n() {
            return Err(CalabiError::LatticeMismatch);
        }
        if g0.hermitian_defect() > T::lit(1e-12) {
            return Err(CalabiError::InvalidMetric { min_eig: f64::NAN });
        }
        let (lo, _) = g0.hermitian_eigenvalues();
        if !(lo > T::zero()) {
            return Err(CalabiError::InvalidMetric { min_eig: lo.to_f64_lossy() });
        }
        Ok(Self { g0, psi })
    }

    pub fn flat(lattice: TorusLattice<T>, g0: SmallMatrix<T>) -> Result<Self> {
        Self::new(g0, ScalarField::zeros(lattice))
    }

    pub fn euclidean(lattice: TorusLattice<T>) -> Self {
        Self::flat(lattice, SmallMatrix::identity(lattice.n())).expect("identity is PD")
    }

    pub fn g0(&self) -> &SmallMatrix<T> {
        &self.g0
    }

    pub fn psi(&self) -> &ScalarField<T> {
        &self.psi
    }

    pub fn lattice(&self) -> &TorusLattice<T> {
        self.psi.lattice()
    }

    pub fn is_flat(&self) -> bool {
        self.psi.values().iter().all(|&v| v == T::zero())
    }

    pub fn metric(&self, ops: &SpectralOps<T>) -> HermitianMetricField<T> {
        assemble_metric(ops, self, &KahlerPotential(ScalarField::zeros(*self.lattice())))
    }
}

/// Kähler potential `φ` relative to the reference metric.
#[derive(Debug, Clone, PartialEq)]
pub struct KahlerPotential<T>(pub ScalarField<T>);

impl<T: Real> KahlerPotential<T> {
    pub fn zero(lattice: TorusLattice<T>) -> Self {
        Self(ScalarField::zeros(lattice))
    }

    pub fn field(&self) -> &ScalarField<T> {
        &self.0
    }

    pub fn into_field(self) -> ScalarField<T> {
        self.0
    }
}

/// `g_φ = g0 + ∂∂̄(ψ + φ)`.
pub fn assemble_metric<T: Real>(
    ops: &SpectralOps<T>,
    reference: &ReferenceGeometry<T>,
    phi: &KahlerPotential<T>,
) -> HermitianMetricField<T> {
    let total = reference.psi() + phi.field();
    let ddbar = ops.dd_bar(&total);
    let base = HermitianMetricField::constant(*reference.lattice(), reference.g0());
    base.add(&ddbar)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityReport<T> {
    pub is_pd: bool,
    pub min_eig: T,
}

/// Minimum over the grid of the smallest eigenvalue; PD iff it exceeds `pd_floor`.
/// Non-finite entries report as not PD.
pub fn positivity_check<T: Real>(g: &HermitianMetricField<T>, pd_floor: T) -> PositivityReport<T> {
    let min_eig = (0..g.len())
        .into_par_iter()
        .map(|p| {
            let lo = g.at(p).hermitian_eigenvalues().0;
            if lo.is_finite() { lo } else { T::neg_infinity() }
        })
        .reduce(T::infinity, T::min);
    PositivityReport {
        is_pd: min_eig > pd_floor,
        min_eig,
    }
}

fn require_pd<T: Real>(g: &HermitianMetricField<T>, pd_floor: T) -> Result<()> {
    let r = positivity_check(g, pd_floor);
    if r.is_pd {
        Ok(())
    } else {
        Err(CalabiError::InvalidMetric { min_eig: r.min_eig.to_f64_lossy() })
    }
}

/// Constants `c1 ≤ C2` with `c1·g_ref ≤ g ≤ C2·g_ref` at every grid point.
pub fn metric_bounds<T: Real>(
    g: &HermitianMetricField<T>,
    g_ref: &HermitianMetricField<T>,
    pd_floor: T,
) -> Result<(T, T)> {
    require_pd(g, pd_floor)?;
    require_pd(g_ref, pd_floor)?;
    if g.lattice() != g_ref.lattice() {
        return Err(CalabiError::LatticeMismatch);
    }
    Ok((0..g.len())
        .into_par_iter()
        .map(|p| g.at(p).generalized_eigenvalues(&g_ref.at(p)))
        .reduce(
            || (T::infinity(), T::neg_infinity()),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        ))
}

/// Pointwise matrix inverse and determinant.
pub fn inverse_and_det<T: Real>(
    g: &HermitianMetricField<T>,
    pd_floor: T,
) -> Result<(HermitianMetricField<T>, ScalarField<T>)> {
    require_pd(g, pd_floor)?;
    Ok(inverse_and_det_unchecked(g))
}

pub(crate) fn inverse_and_det_unchecked<T: Real>(
    g: &HermitianMetricField<T>,
) -> (HermitianMetricField<T>, ScalarField<T>) {
    let inv: Vec<_> = (0..g.len())
        .into_par_iter()
        .map(|p| g.at(p).inverse().unwrap_or_else(|| SmallMatrix::scalar(g.n(), T::nan())))
        .collect();
    (HermitianMetricField::from_points(*g.lattice(), &inv), g.det())
}

/// Grid sum of `det g` times the cell volume.
pub fn total_volume<T: Real>(g: &HermitianMetricField<T>) -> T {
    let det = g.det();
    det.values().iter().copied().sum::<T>() * g.lattice().cell_volume()
}
