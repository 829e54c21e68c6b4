//! Calabi flow `φ̇ = R_φ − r̄` written as `φ̇ + Aφ = f(φ)`, `A = Δ₀²`, and advanced by
//! exponential-Euler steps whose implicit stage is solved by Picard iteration.

mod expanded;

use std::fmt;

use num_complex::Complex;
use rayon::prelude::*;

use crate::curvature::{curvature_report, scalar_curvature, up, weighted_average};
use crate::diagnostics::DiagnosticsRow;
use crate::error::{CalabiError, Result};
use crate::lattice::ScalarField;
use crate::metric::{
    assemble_metric, metric_bounds, positivity_check, total_volume, HermitianMetricField, KahlerPotential,
    ReferenceGeometry, DEFAULT_PD_FLOOR,
};
use crate::norms::{holder_norm, holder_norms, HolderParams};
use crate::real::Real;
use crate::semigroup::BilaplacianSymbol;
use crate::spectral::SpectralOps;

use expanded::{
    cubic_terms, curvature_terms, fourth_order_direct, fourth_order_product, metric_derivative_terms, perturbed_inverse, Jet,
    ReferenceJet,
};

/// Everything fixed along a run: discretization, reference geometry, splitting operator, `r̄`.
#[derive(Debug, Clone)]
pub struct FlowProblem<T: Real> {
    ops: SpectralOps<T>,
    reference: ReferenceGeometry<T>,
    ref_metric: HermitianMetricField<T>,
    ref_jet: ReferenceJet<T>,
    symbol: BilaplacianSymbol<T>,
    rbar: T,
    pd_floor: T,
}

impl<T: Real> FlowProblem<T> {
    /// `r̄` is taken from the reference metric, which shares the class of every `g_φ`.
    pub fn new(ops: SpectralOps<T>, reference: ReferenceGeometry<T>, pd_floor: T) -> Result<Self> {
        if ops.lattice() != reference.lattice() {
            return Err(CalabiError::LatticeMismatch);
        }
        let ref_metric = reference.metric(&ops);
        let report = positivity_check(&ref_metric, pd_floor);
        if !report.is_pd {
            return Err(CalabiError::InvalidMetric { min_eig: report.min_eig.to_f64_lossy() });
        }
        let symbol = BilaplacianSymbol::build(&ops, reference.g0())?;
        let r = scalar_curvature(&ops, &ref_metric, pd_floor)?;
        let rbar = weighted_average(&r, &ref_metric.det());
        let ref_jet = ReferenceJet::compute(&ops, reference.g0(), reference.psi(), reference.is_flat());
        Ok(Self { ops, reference, ref_metric, ref_jet, symbol, rbar, pd_floor })
    }

    pub fn with_default_floor(ops: SpectralOps<T>, reference: ReferenceGeometry<T>) -> Result<Self> {
        Self::new(ops, reference, T::lit(DEFAULT_PD_FLOOR))
    }

    pub fn ops(&self) -> &SpectralOps<T> {
        &self.ops
    }

    pub fn reference(&self) -> &ReferenceGeometry<T> {
        &self.reference
    }

    pub fn reference_metric(&self) -> &HermitianMetricField<T> {
        &self.ref_metric
    }

    pub fn symbol(&self) -> &BilaplacianSymbol<T> {
        &self.symbol
    }

    pub fn rbar(&self) -> T {
        self.rbar
    }

    pub fn pd_floor(&self) -> T {
        self.pd_floor
    }

    pub fn metric(&self, phi: &ScalarField<T>) -> HermitianMetricField<T> {
        assemble_metric(&self.ops, &self.reference, &KahlerPotential(phi.clone()))
    }

    /// `R_φ − r̄`.
    pub fn velocity(&self, phi: &ScalarField<T>) -> Result<ScalarField<T>> {
        let r = scalar_curvature(&self.ops, &self.metric(phi), self.pd_floor)?;
        Ok(r.map(|v| v - self.rbar))
    }

    /// `f(φ) = Aφ + R_φ − r̄`.
    pub fn forcing(&self, phi: &ScalarField<T>) -> Result<ScalarField<T>> {
        let a_phi = self.symbol.apply_operator(&self.ops, phi)?;
        let vel = self.velocity(phi)?;
        Ok(&a_phi + &vel)
    }

    fn check_pd(&self, jet: &Jet<T>) -> Result<()> {
        let min_eig = (0..jet.len())
            .into_par_iter()
            .map(|p| {
                let lo = (self.ref_jet.g[p] + jet.d2[p]).hermitian_eigenvalues().0;
                if lo.is_finite() { lo } else { T::neg_infinity() }
            })
            .reduce(T::infinity, T::min);
        if min_eig > self.pd_floor {
            Ok(())
        } else {
            Err(CalabiError::InvalidMetric { min_eig: min_eig.to_f64_lossy() })
        }
    }

    fn real_field(&self, vals: Vec<Complex<T>>) -> ScalarField<T> {
        ScalarField::from_values(*self.ops.lattice(), vals.into_iter().map(|c| c.re).collect())
            .unwrap_or_else(|_| ScalarField::constant(*self.ops.lattice(), T::nan()))
    }

    /// `Δ_g² φ + R_φ − r̄` in the expanded form with pointwise chain rule, `g` the reference metric.
    pub fn forcing_expanded(&self, phi: &ScalarField<T>) -> Result<ScalarField<T>> {
        let jet = Jet::compute(&self.ops, phi);
        self.check_pd(&jet)?;
        let r = &self.ref_jet;
        let n = r.n;
        let vals = (0..jet.len())
            .into_par_iter()
            .map(|p| {
                let hinv = perturbed_inverse(r, p, &jet.d2[p]).expect("checked positive definite");
                fourth_order_product(n, &r.inv[p], &hinv, &jet.d2[p], &jet.d4[p])
                    + metric_derivative_terms(r, p, &jet.d2[p], &jet.d3[p], &jet.d3b[p])
                    + curvature_terms(r, p, &hinv, &jet.d3[p], &jet.d3b[p])
                    - Complex::new(self.rbar, T::zero())
            })
            .collect();
        Ok(self.real_field(vals))
    }

    /// `Δ_g u = g^{ij̄} ∂_i∂_j̄ u` with the reference metric.
    pub fn reference_laplacian(&self, u: &ScalarField<T>) -> ScalarField<T> {
        let dd = self.ops.dd_bar(u);
        let vals = (0..u.len())
            .into_par_iter()
            .map(|p| (self.ref_jet.inv[p] * dd.at(p)).trace().re)
            .collect();
        ScalarField::from_values(*u.lattice(), vals).unwrap_or_else(|_| ScalarField::constant(*u.lattice(), T::nan()))
    }

    /// `Δ_g(Δ_g φ) + R_φ − r̄` composed from two variable-coefficient Laplacians.
    pub fn forcing_nested(&self, phi: &ScalarField<T>) -> Result<ScalarField<T>> {
        let bilap = self.reference_laplacian(&self.reference_laplacian(phi));
        Ok(&bilap + &self.velocity(phi)?)
    }

    /// Relative sup residual between `(g^{ij̄}g^{kl̄} − h^{ij̄}h^{kl̄}) φ_{ij̄kl̄}` and its product form.
    pub fn fourth_order_identity_residual(&self, phi: &ScalarField<T>) -> Result<T> {
        let jet = Jet::compute(&self.ops, phi);
        self.check_pd(&jet)?;
        let r = &self.ref_jet;
        let n = r.n;
        let (diff, scale) = (0..jet.len())
            .into_par_iter()
            .map(|p| {
                let hinv = perturbed_inverse(r, p, &jet.d2[p]).expect("checked positive definite");
                let lhs = fourth_order_direct(n, &r.inv[p], &hinv, &jet.d4[p]);
                let rhs = fourth_order_product(n, &r.inv[p], &hinv, &jet.d2[p], &jet.d4[p]);
                ((lhs - rhs).norm(), lhs.norm())
            })
            .reduce(|| (T::zero(), T::zero()), |a, b| (a.0.max(b.0), a.1.max(b.1)));
        Ok(if diff == T::zero() { T::zero() } else { diff / scale })
    }

    /// `f(φ1) − f(φ2)` in the grouped expanded form
    /// `(g g − h₁h₁) δ₄ + (h₂h₂ − h₁h₁)(φ2₄ + ∂∂̄g) + Δ_g-lower-order(δ) + Q(h₁, φ1) − Q(h₂, φ2)`,
    /// with `δ = φ1 − φ2` and `Q` the cubic third-derivative term.
    pub fn forcing_difference(&self, phi1: &ScalarField<T>, phi2: &ScalarField<T>) -> Result<ScalarField<T>> {
        let j1 = Jet::compute(&self.ops, phi1);
        let j2 = Jet::compute(&self.ops, phi2);
        self.check_pd(&j1)?;
        self.check_pd(&j2)?;
        let jd = Jet::compute(&self.ops, &(phi1 - phi2));
        let r = &self.ref_jet;
        let n = r.n;
        let vals = (0..jd.len())
            .into_par_iter()
            .map(|p| {
                let m = &r.inv[p];
                let h1 = perturbed_inverse(r, p, &j1.d2[p]).expect("checked positive definite");
                let h2 = perturbed_inverse(r, p, &j2.d2[p]).expect("checked positive definite");
                let mut s = Complex::new(T::zero(), T::zero());
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            for l in 0..n {
                                let c1 = up(m, i, j) * up(m, k, l) - up(&h1, i, j) * up(&h1, k, l);
                                let c2 = up(&h2, i, j) * up(&h2, k, l) - up(&h1, i, j) * up(&h1, k, l);
                                let mut w = j2.d4[p][i][j].get(k, l);
                                if !r.flat {
                                    w = w + r.ddg[p][i][j].get(k, l);
                                }
                                s = s + c1 * jd.d4[p][i][j].get(k, l) + c2 * w;
                            }
                        }
                    }
                }
                s + metric_derivative_terms(r, p, &jd.d2[p], &jd.d3[p], &jd.d3b[p])
                    + cubic_terms(r, p, &h1, &j1.d3[p], &j1.d3b[p])
                    - cubic_terms(r, p, &h2, &j2.d3[p], &j2.d3b[p])
            })
            .collect();
        Ok(self.real_field(vals))
    }

    /// `t^{1/2}‖f(φ1) − f(φ2)‖_{0,α} / (‖δ‖_{2,α} + t^{1/2}‖δ‖_{4,α})`, `δ = φ1 − φ2`.
    pub fn lipschitz_surrogate(&self, phi1: &ScalarField<T>, phi2: &ScalarField<T>, t: T, params: &HolderParams) -> Result<T> {
        let df = self.forcing_difference(phi1, phi2)?;
        let delta = phi1 - phi2;
        let nd = holder_norms(&self.ops, &delta, &[2, 4], params)?;
        let sqrt_t = t.sqrt();
        let den = nd[0] + sqrt_t * nd[1];
        if den == T::zero() {
            return Err(CalabiError::UndefinedRatio);
        }
        Ok(sqrt_t * holder_norm(&self.ops, &df, 0, params)? / den)
    }

    /// One exponential-Euler step `v = e^{−τA}x + φ₁(τA) f(v)` solved by Picard iteration.
    pub fn picard_step(&self, x: &ScalarField<T>, tau: T, tol: T, max_iters: usize) -> (ScalarField<T>, StepReport<T>) {
        let mut report = StepReport::new();
        if !(tau > T::zero()) {
            report.failure = Some(StepFailure::NoConvergence);
            report.reject_reason = Some(format!("non-positive step {tau}"));
            return (x.clone(), report);
        }
        let base = self.symbol.semigroup_apply(&self.ops, x, tau).expect("tau > 0");
        let scale = T::one() + x.sup_norm();
        let threshold = tol * scale;
        let noise = T::lit(64.0) * T::epsilon() * scale;
        let mut v = base.clone();
        let mut prev_diff: Option<T> = None;
        let mut streak = 0usize;
        for it in 1..=max_iters.max(1) {
            report.picard_iters = it;
            let f = match self.forcing(&v) {
                Ok(f) => f,
                Err(e) => {
                    report.failure = Some(StepFailure::Positivity);
                    report.reject_reason = Some(format!("picard iterate {it}: {e}"));
                    return (v, report);
                }
            };
            let next = &base + &self.symbol.duhamel_phi1(&self.ops, &f, tau).expect("tau > 0");
            let diff = (&next - &v).sup_norm();
            v = next;
            report.final_diff = diff;
            if !diff.is_finite() {
                report.failure = Some(StepFailure::Positivity);
                report.reject_reason = Some(format!("picard iterate {it}: non-finite update"));
                return (v, report);
            }
            if let Some(pd) = prev_diff {
                if pd > noise && diff > noise {
                    let ratio = diff / pd;
                    report.picard_ratios.push(ratio);
                    streak = if ratio >= T::one() { streak + 1 } else { 0 };
                    if streak >= 3 {
                        report.failure = Some(StepFailure::Contraction);
                        report.reject_reason = Some(format!("picard ratios ≥ 1 for 3 iterations (last {ratio})"));
                        return (v, report);
                    }
                }
            }
            if diff < threshold {
                report.converged = true;
                return (v, report);
            }
            prev_diff = Some(diff);
        }
        report.failure = Some(StepFailure::NoConvergence);
        report.reject_reason = Some(format!("picard not converged in {max_iters} iterations (last diff {})", report.final_diff));
        (v, report)
    }

    /// Initial state for `φ₀`; a non-positive `g_{φ₀}` yields `PositivityBreakdown` at once.
    pub fn initial_state(&self, phi0: ScalarField<T>, controls: &FlowControls) -> FlowState<T> {
        let mut state = FlowState {
            t: T::zero(),
            tau: T::lit(controls.tau0),
            phi: KahlerPotential(phi0),
            status: FlowStatus::Running,
            step_index: 0,
            attempts: 0,
            consecutive_accepts: 0,
            calabi_energy: T::zero(),
            last_diag: None,
            last_report: None,
            message: None,
        };
        let g = self.metric(state.phi.field());
        let pd = positivity_check(&g, self.pd_floor);
        if !pd.is_pd {
            state.status = FlowStatus::PositivityBreakdown;
            state.message = Some(format!("initial metric not positive definite (min eigenvalue {})", pd.min_eig));
            return state;
        }
        match self.diagnostics(state.phi.field(), &g, T::zero(), state.tau, None, controls) {
            Ok((row, ca, resid)) => {
                state.calabi_energy = ca;
                state.last_diag = Some(row);
                if resid < T::lit(controls.convergence_tol) {
                    state.status = FlowStatus::Converged;
                }
            }
            Err(e) => {
                state.status = FlowStatus::PositivityBreakdown;
                state.message = Some(e.to_string());
            }
        }
        state
    }

    /// Diagnostics of `φ` at time `t`; returns the row, `Ca`, and `‖R − r̄‖∞`.
    fn diagnostics(
        &self,
        phi: &ScalarField<T>,
        omega0: &HermitianMetricField<T>,
        t: T,
        tau: T,
        report: Option<&StepReport<T>>,
        controls: &FlowControls,
    ) -> Result<(DiagnosticsRow, T, T)> {
        let g = self.metric(phi);
        let rep = curvature_report(&self.ops, &g, self.rbar, self.pd_floor)?;
        let (c1, c2) = metric_bounds(&g, omega0, self.pd_floor)?;
        let vel = rep.scalar.map(|v| v - self.rbar);
        let resid = vel.sup_norm();
        let measured_rbar = weighted_average(&rep.scalar, &g.det());
        let params = controls.holder_params(self.ops.lattice().size(), self.ops.lattice().n());
        let (h2, h4, weighted) = if controls.holder_diagnostics {
            let hn = holder_norms(&self.ops, phi, &[2, 4], &params)?;
            let h0 = holder_norm(&self.ops, &vel, 0, &params)?;
            (hn[0], hn[1], t.sqrt() * (h0 + hn[1]))
        } else {
            (T::zero(), T::zero(), T::zero())
        };
        let f = |v: T| v.to_f64_lossy();
        let row = DiagnosticsRow {
            t: f(t),
            tau: f(tau),
            calabi_energy: f(rep.calabi_energy),
            max_abs_r: f(rep.scalar.sup_norm()),
            rbar: f(measured_rbar),
            volume: f(total_volume(&g)),
            c1_bound: f(c1),
            c2_bound: f(c2),
            max_riemann: f(rep.max_riemann),
            holder_2a: f(h2),
            holder_4a: f(h4),
            weighted_norm: f(weighted),
            picard_iters: report.map_or(0, |r| r.picard_iters as u64),
            picard_last_ratio: report.and_then(|r| r.picard_ratios.last().copied()).map_or(0.0, f),
            phi_mean: f(phi.mean()),
        };
        Ok((row, rep.calabi_energy, resid))
    }

    /// One attempted step; updates `state` in place. `omega0` is the metric `g_{φ₀}`.
    pub fn advance(&self, state: &mut FlowState<T>, controls: &FlowControls, omega0: &HermitianMetricField<T>) {
        if state.status != FlowStatus::Running {
            return;
        }
        let t_end = T::lit(controls.t_end);
        if state.attempts >= controls.max_steps {
            state.status = FlowStatus::MaxStepsReached;
            state.message = Some(format!("{} step attempts reached at t = {}", state.attempts, state.t));
            return;
        }
        let remaining = t_end - state.t;
        if !(remaining > T::zero()) {
            return;
        }
        let tau = state.tau.min(remaining);
        let (v, report) = self.picard_step(state.phi.field(), tau, T::lit(controls.picard_tol), controls.picard_max_iters);
        state.attempts += 1;
        let mut reason = report.failure.map(|f| (f, report.reject_reason.clone().unwrap_or_default()));
        let mut accepted = None;
        if reason.is_none() {
            match self.diagnostics(&v, omega0, state.t + tau, tau, Some(&report), controls) {
                Ok((row, ca, resid)) => {
                    let slack = T::lit(controls.energy_slack) * (T::one() + state.calabi_energy);
                    if ca <= state.calabi_energy + slack {
                        accepted = Some((row, ca, resid));
                    } else {
                        reason = Some((
                            StepFailure::EnergyIncrease,
                            format!("calabi energy increased {} → {}", state.calabi_energy, ca),
                        ));
                    }
                }
                Err(e) => reason = Some((StepFailure::Positivity, format!("accepted iterate: {e}"))),
            }
        }
        let mut report = report;
        match accepted {
            Some((row, ca, resid)) => {
                report.accepted = true;
                state.t = state.t + tau;
                state.phi = KahlerPotential(v);
                state.step_index += 1;
                state.calabi_energy = ca;
                state.last_diag = Some(row);
                state.consecutive_accepts += 1;
                if state.consecutive_accepts >= 5 {
                    state.tau = (state.tau * T::lit(2.0)).min(T::lit(controls.tau_max));
                    state.consecutive_accepts = 0;
                }
                if resid < T::lit(controls.convergence_tol) {
                    state.status = FlowStatus::Converged;
                }
            }
            None => {
                let (kind, text) = reason.expect("rejected step carries a reason");
                report.reject_reason = Some(text.clone());
                state.consecutive_accepts = 0;
                state.tau = state.tau / T::lit(2.0);
                if state.tau < T::lit(controls.tau_min) {
                    state.status = match kind {
                        StepFailure::Positivity => FlowStatus::PositivityBreakdown,
                        StepFailure::Contraction => FlowStatus::ContractionFailure,
                        StepFailure::NoConvergence | StepFailure::EnergyIncrease => FlowStatus::MaxStepsReached,
                    };
                    state.message = Some(format!("step size below minimum at t = {}: {text}", state.t));
                }
            }
        }
        state.last_report = Some(report);
    }

    /// Runs until `t_end` or a terminal status; calls `observe`
    /// with the initial state and after every accepted step.
    pub fn run_flow_with(
        &self,
        phi0: ScalarField<T>,
        controls: &FlowControls,
        mut observe: impl FnMut(&FlowState<T>, &DiagnosticsRow),
    ) -> FlowRun<T> {
        let mut state = self.initial_state(phi0, controls);
        let mut rows = Vec::new();
        if let Some(row) = state.last_diag {
            observe(&state, &row);
            rows.push(row);
        }
        let omega0 = self.metric(state.phi.field());
        let t_end = T::lit(controls.t_end);
        while state.status == FlowStatus::Running && state.t < t_end {
            let before = state.step_index;
            self.advance(&mut state, controls, &omega0);
            if state.step_index > before {
                let row = state.last_diag.expect("accepted step records diagnostics");
                observe(&state, &row);
                rows.push(row);
            }
        }
        FlowRun { state, rows }
    }

    pub fn run_flow(&self, phi0: ScalarField<T>, controls: &FlowControls) -> FlowRun<T> {
        self.run_flow_with(phi0, controls, |_, _| {})
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepFailure {
    Positivity,
    Contraction,
    NoConvergence,
    EnergyIncrease,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<T> {
    pub picard_iters: usize,
    /// `‖v^{m+1} − v^m‖ / ‖v^m − v^{m−1}‖`, recorded while both exceed rounding level.
    pub picard_ratios: Vec<T>,
    pub accepted: bool,
    pub converged: bool,
    pub final_diff: T,
    pub failure: Option<StepFailure>,
    pub reject_reason: Option<String>,
}

impl<T: Real> StepReport<T> {
    fn new() -> Self {
        Self {
            picard_iters: 0,
            picard_ratios: Vec::new(),
            accepted: false,
            converged: false,
            final_diff: T::zero(),
            failure: None,
            reject_reason: None,
        }
    }

    pub fn max_ratio(&self) -> T {
        self.picard_ratios.iter().fold(T::zero(), |m, &r| m.max(r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    Running,
    Converged,
    PositivityBreakdown,
    ContractionFailure,
    MaxStepsReached,
}

impl FlowStatus {
    pub fn is_terminal(self) -> bool {
        self != FlowStatus::Running
    }
}

impl fmt::Display for FlowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowStatus::Running => "Running",
            FlowStatus::Converged => "Converged",
            FlowStatus::PositivityBreakdown => "PositivityBreakdown",
            FlowStatus::ContractionFailure => "ContractionFailure",
            FlowStatus::MaxStepsReached => "MaxStepsReached",
        })
    }
}

/// Step-control and diagnostics settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowControls {
    pub tau0: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub t_end: f64,
    /// Budget of step attempts, accepted or rejected.
    pub max_steps: usize,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub convergence_tol: f64,
    pub energy_slack: f64,
    pub holder_diagnostics: bool,
    pub alpha: f64,
    /// Seminorm base-point stride; `None` picks `max(1, N/32)` for `n = 1` and `max(1, N/8)` for `n = 2`.
    pub holder_stride: Option<usize>,
}

impl FlowControls {
    /// Defaults with `τ_max = 1/λ_min⁺` of the problem's splitting operator.
    pub fn for_problem<T: Real>(problem: &FlowProblem<T>) -> Self {
        Self {
            tau0: 1e-4,
            tau_min: 1e-12,
            tau_max: (T::one() / problem.symbol().lambda_min_positive()).to_f64_lossy(),
            t_end: 1.0,
            max_steps: 100_000,
            picard_tol: 1e-12,
            picard_max_iters: 50,
            convergence_tol: 1e-8,
            energy_slack: 1e-10,
            holder_diagnostics: true,
            alpha: 0.5,
            holder_stride: None,
        }
    }

    pub fn holder_params(&self, size: usize, n: usize) -> HolderParams {
        let default_stride = if n == 1 { (size / 32).max(1) } else { (size / 8).max(1) };
        HolderParams { alpha: self.alpha, pair_stride: self.holder_stride.unwrap_or(default_stride), max_separation: size / 4 }
    }
}

#[derive(Debug, Clone)]
pub struct FlowState<T> {
    pub t: T,
    pub tau: T,
    pub phi: KahlerPotential<T>,
    pub status: FlowStatus,
    /// Accepted steps so far.
    pub step_index: usize,
    pub attempts: usize,
    pub consecutive_accepts: usize,
    pub calabi_energy: T,
    pub last_diag: Option<DiagnosticsRow>,
    pub last_report: Option<StepReport<T>>,
    /// Explanation attached to a terminal status.
    pub message: Option<String>,
}

#[derive(Debug, Clone)]
pub struct FlowRun<T> {
    pub state: FlowState<T>,
    /// Initial row followed by one row per accepted step.
    pub rows: Vec<DiagnosticsRow>,
}
