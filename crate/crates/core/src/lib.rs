//! Calabi flow on flat complex tori by Fourier spectral discretization and
//! exponential-Euler time stepping.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod metric;
pub mod norms;
pub mod real;
pub mod semigroup;
pub mod spectral;
pub mod verify;

pub use diagnostics::{DiagnosticsRow, ExperimentResult, Measurement};
pub use error::{CalabiError, Result};
pub use flow::{FlowControls, FlowProblem, FlowRun, FlowState, FlowStatus};
pub use io::{InitialSpec, RunConfig, SnapshotHeader};
pub use lattice::{ComplexField, Mode, ScalarField, SpectralCoeffs, TorusLattice};
pub use linalg::SmallMatrix;
pub use metric::{HermitianMetricField, KahlerPotential, ReferenceGeometry};
pub use real::Real;
pub use semigroup::BilaplacianSymbol;
pub use spectral::{SpectralOps, Wirtinger};

pub type TorusLattice64 = TorusLattice<f64>;
pub type ScalarField64 = ScalarField<f64>;
pub type ScalarField32 = ScalarField<f32>;
pub type HermitianMetricField64 = HermitianMetricField<f64>;
pub type SpectralOps64 = SpectralOps<f64>;
pub type SpectralOps32 = SpectralOps<f32>;
pub type FlowProblem64 = FlowProblem<f64>;
pub type FlowRun64 = FlowRun<f64>;
