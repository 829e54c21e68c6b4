//! Packaged experiments. Every threshold not fixed by symbol arithmetic is a calibrated
//! constant of this crate and is labelled as such in the reports.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{DiagnosticsRow, ExperimentResult};
use crate::error::Result;
use crate::flow::{FlowControls, FlowRun, FlowStatus};
use crate::io::{InitialSpec, RunConfig};
use crate::lattice::{Mode, ScalarField};
use crate::norms::{fit_exponential_decay, holder_norm};

/// Amplitude of the linear-spectrum probes.
pub const LINEAR_PROBE_AMPLITUDE: f64 = 1e-4;
/// `τ·λ(k)` used by the linear-spectrum runs.
pub const LINEAR_STEP_PRODUCT: f64 = 0.2;
/// Allowed relative deviation of a fitted decay rate from `λ(k)`.
pub const LINEAR_RATE_TOL: f64 = 0.02;
pub const STABILITY_R2_MIN: f64 = 0.99;
pub const STABILITY_FINAL_OSC: f64 = 1e-6;
pub const VOLUME_REL_TOL: f64 = 1e-8;
pub const RBAR_TOL: f64 = 1e-8;
pub const SMOOTHING_REFINE_TOL: f64 = 0.2;
pub const LADDER_MONOTONE_SLACK: f64 = 1e-3;
pub const LADDER_CONTRACTION: f64 = 0.5;
/// Rows forming the initial-decade curvature ceiling of the extension monitor.
pub const MONITOR_DECADE_ROWS: usize = 10;

fn timed(name: &str, body: impl FnOnce(&mut ExperimentResult) -> Result<()>) -> Result<ExperimentResult> {
    let start = Instant::now();
    let mut r = ExperimentResult::new(name);
    body(&mut r)?;
    r.wall_clock = start.elapsed();
    Ok(r)
}

fn status_note(r: &mut ExperimentResult, run: &FlowRun<f64>) {
    let msg = run.state.message.as_deref().unwrap_or("");
    r.note(format!("final status {} at t = {} after {} accepted steps {msg}", run.state.status, run.state.t, run.state.step_index).trim_end().to_string());
}

fn breakdown(status: FlowStatus) -> bool {
    matches!(status, FlowStatus::PositivityBreakdown | FlowStatus::ContractionFailure)
}

fn unit_axis(n: usize, axis: usize, k: i64) -> Vec<i64> {
    let mut v = vec![0; 2 * n];
    v[axis] = k;
    v
}

/// Decay of small single-mode data against the splitting symbol.
pub fn experiment_linear_spectrum(cfg: &RunConfig) -> Result<ExperimentResult> {
    timed("linear_spectrum", |r| {
        let problem = cfg.problem()?;
        if !problem.reference().is_flat() {
            r.fail("linear spectrum needs a flat reference (psi = 0)");
            return Ok(());
        }
        let lat = *problem.ops().lattice();
        for k in [unit_axis(cfg.n, 0, 1), unit_axis(cfg.n, 1, 1), unit_axis(cfg.n, 0, 2)] {
            let label = format!("mode_{}", k.iter().map(i64::to_string).collect::<Vec<_>>().join("_"));
            let slot = lat.frequency_slot(&k).expect("low mode is on the grid");
            let lambda = problem.symbol().lambda()[slot];
            let tau = LINEAR_STEP_PRODUCT / lambda;
            let controls = FlowControls {
                tau0: tau,
                tau_max: tau,
                t_end: 4.0 / lambda,
                convergence_tol: 0.0,
                holder_diagnostics: false,
                ..cfg.controls(&problem)
            };
            let phi0 = ScalarField::from_modes(lat, &[Mode::cos(k.clone(), LINEAR_PROBE_AMPLITUDE)])?;
            let mut series = Vec::new();
            let run = problem.run_flow_with(phi0, &controls, |s, _| {
                series.push((s.t, 2.0 * problem.ops().forward(s.phi.field()).coeffs()[slot].norm()));
            });
            if run.state.status != FlowStatus::Running {
                r.fail(format!("{label}: flow ended with {}", run.state.status));
                status_note(r, &run);
            }
            r.runs.push((label.clone(), run.rows));
            r.report(format!("{label} target rate"), lambda);
            match fit_exponential_decay(&series) {
                Ok((rate, r2)) => {
                    let rel = (rate / lambda - 1.0).abs();
                    r.check(format!("{label} fitted rate"), rate, format!("within {LINEAR_RATE_TOL} of target"), rel <= LINEAR_RATE_TOL);
                    r.report(format!("{label} fit r2"), r2);
                }
                Err(e) => r.fail(format!("{label}: {e}")),
            }
        }
        Ok(())
    })
}

/// Rows strictly inside the middle half of the run's time span.
fn mid_trajectory(rows: &[DiagnosticsRow]) -> Vec<(f64, f64)> {
    let t_final = rows.last().map_or(0.0, |r| r.t);
    rows.iter()
        .filter(|r| r.t >= 0.25 * t_final && r.t <= 0.75 * t_final)
        .map(|r| (r.t, r.max_abs_r))
        .collect()
}

/// Largest energy increase between consecutive rows, in units of `1 + Ca`.
pub fn max_energy_increase(rows: &[DiagnosticsRow]) -> f64 {
    rows.windows(2)
        .map(|w| (w[1].calabi_energy - w[0].calabi_energy) / (1.0 + w[0].calabi_energy))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn max_volume_drift(rows: &[DiagnosticsRow]) -> f64 {
    let v0 = rows.first().map_or(1.0, |r| r.volume);
    rows.iter().map(|r| ((r.volume - v0) / v0).abs()).fold(0.0, f64::max)
}

fn check_class_invariants(r: &mut ExperimentResult, rows: &[DiagnosticsRow], slack: f64) {
    if rows.len() > 1 {
        r.check("max energy increase / (1 + Ca)", max_energy_increase(rows), format!("≤ {slack:e}"), max_energy_increase(rows) <= slack);
    }
    r.check("max relative volume drift", max_volume_drift(rows), format!("≤ {VOLUME_REL_TOL:e}"), max_volume_drift(rows) <= VOLUME_REL_TOL);
    let rbar = rows.iter().map(|r| r.rbar.abs()).fold(0.0, f64::max);
    r.check("max |rbar|", rbar, format!("≤ {RBAR_TOL:e}"), rbar <= RBAR_TOL);
    if let Some((i, msg)) = rows.iter().enumerate().find_map(|(i, row)| row.check_invariants().map(|m| (i, m))) {
        r.fail(format!("row {i}: {msg}"));
    }
}

/// Long run from small data: convergence to the flat metric, exponential decay of `R`.
pub fn experiment_stability(cfg: &RunConfig) -> Result<ExperimentResult> {
    timed("stability", |r| {
        let problem = cfg.problem()?;
        let controls = cfg.controls(&problem);
        let phi0 = cfg.initial_potential()?;
        let params = controls.holder_params(cfg.size, cfg.n);
        let eps0 = holder_norm(problem.ops(), &phi0, 2, &params)?;
        r.check("initial |phi0|_{2,alpha}", eps0, format!("≤ epsilon = {} (calibrated)", cfg.experiment.epsilon), eps0 <= cfg.experiment.epsilon);
        let run = problem.run_flow(phi0, &controls);
        status_note(r, &run);
        r.check("converged", (run.state.status == FlowStatus::Converged) as u8 as f64, "= 1", run.state.status == FlowStatus::Converged);
        if run.rows.is_empty() {
            r.fail(format!("no diagnostics: {}", run.state.message.clone().unwrap_or_default()));
            return Ok(());
        }
        check_class_invariants(r, &run.rows, controls.energy_slack);
        if run.rows.len() > 1 {
            let mid = mid_trajectory(&run.rows);
            match fit_exponential_decay(&mid) {
                Ok((rate, r2)) => {
                    r.report("max|R| decay rate", rate);
                    r.check("max|R| exponential fit r2", r2, format!("≥ {STABILITY_R2_MIN}"), r2 >= STABILITY_R2_MIN);
                }
                Err(e) => r.fail(format!("mid-trajectory fit: {e}")),
            }
        }
        let osc = run.state.phi.field().centered().sup_norm();
        r.check("final |phi - mean(phi)|_inf", osc, format!("≤ {STABILITY_FINAL_OSC:e}"), osc <= STABILITY_FINAL_OSC);
        r.report("final t", run.state.t);
        r.report("accepted steps", run.state.step_index as f64);
        r.runs.push(("flow".into(), run.rows));
        Ok(())
    })
}

/// Frequencies `1..=m` along the first two real axes with amplitudes `a·j^{-2.5}` and seeded phases.
pub fn rough_modes(n: usize, max_mode: i64, amplitude: f64, seed: u64) -> Vec<Mode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for j in 1..=max_mode {
        for axis in 0..2 {
            let a = amplitude * (j as f64).powf(-2.5);
            modes.push(Mode::new(unit_axis(n, axis, j), a, rng.gen_range(0.0..std::f64::consts::TAU)));
        }
    }
    modes
}

/// `sup_t t^{1/2}‖φ(t)‖_{4,α} / ‖φ₀‖_{2,α}` and the companion weighted constant for one resolution.
pub fn smoothing_constants(cfg: &RunConfig, modes: &[Mode], holder_stride: Option<usize>) -> Result<(f64, f64, FlowRun<f64>)> {
    let problem = cfg.problem()?;
    let controls = FlowControls { holder_diagnostics: true, holder_stride, ..cfg.controls(&problem) };
    let phi0 = ScalarField::from_modes(*problem.ops().lattice(), modes)?;
    let run = problem.run_flow(phi0, &controls);
    let base = run.rows.first().map_or(0.0, |r| r.holder_2a);
    let sup = |f: &dyn Fn(&DiagnosticsRow) -> f64| run.rows.iter().map(f).fold(0.0, f64::max);
    let smoothing = sup(&|r| r.t.max(0.0).sqrt() * r.holder_4a);
    let weighted = sup(&|r| r.weighted_norm);
    let q = |num: f64| if num == 0.0 { 0.0 } else { num / base };
    Ok((q(smoothing), q(weighted), run))
}

/// Parabolic smoothing constant and its stability under grid refinement `N → 2N`.
pub fn experiment_smoothing(cfg: &RunConfig) -> Result<ExperimentResult> {
    timed("smoothing", |r| {
        let e = &cfg.experiment;
        let modes = if e.rough_max_mode > 0 {
            rough_modes(cfg.n, e.rough_max_mode, e.rough_amplitude, cfg.seed)
        } else {
            match &cfg.initial {
                InitialSpec::Modes(m) => m.clone(),
                InitialSpec::Snapshot(_) => {
                    r.fail("smoothing needs mode data to resample at 2N");
                    return Ok(());
                }
            }
        };
        let fine_cfg = cfg.with_size(2 * cfg.size);
        let default_stride = cfg.controls(&cfg.problem()?).holder_params(cfg.size, cfg.n).pair_stride;
        let coarse_stride = cfg.holder_stride.unwrap_or(default_stride);
        let mut c = Vec::new();
        for (label, c_cfg, stride) in [("coarse", cfg, coarse_stride), ("fine", &fine_cfg, 2 * coarse_stride)] {
            let (cm, cw, run) = smoothing_constants(c_cfg, &modes, Some(stride))?;
            if breakdown(run.state.status) || run.rows.is_empty() {
                r.fail(format!("{label} run: {}", run.state.status));
                status_note(r, &run);
            }
            r.check(format!("c_meas N={}", c_cfg.size), cm, "finite", cm.is_finite());
            r.report(format!("weighted constant N={}", c_cfg.size), cw);
            r.runs.push((format!("{label}_N{}", c_cfg.size), run.rows));
            c.push(cm);
        }
        let rel = if c[0] == 0.0 && c[1] == 0.0 { 0.0 } else { (c[1] / c[0] - 1.0).abs() };
        r.check("relative change under refinement", rel, format!("≤ {SMOOTHING_REFINE_TOL}"), rel <= SMOOTHING_REFINE_TOL);
        Ok(())
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|p| (p.0.ln(), p.1.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (xm, ym) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Picard contraction factors down the ladder `τ₀/2^m` and the Lipschitz surrogate scaling.
pub fn experiment_contraction_ladder(cfg: &RunConfig) -> Result<ExperimentResult> {
    timed("contraction", |r| {
        let problem = cfg.problem()?;
        let controls = cfg.controls(&problem);
        let phi0 = cfg.initial_potential()?;
        let params = controls.holder_params(cfg.size, cfg.n);
        let mut ratios = Vec::new();
        let mut failures = 0;
        for m in 0..cfg.experiment.ladder_rungs {
            let tau = cfg.tau0 / 2f64.powi(m as i32);
            let (_, rep) = problem.picard_step(&phi0, tau, cfg.picard_tol, cfg.picard_max_iters);
            if rep.failure.is_some() {
                failures += 1;
                r.note(format!("rung tau = {tau:e}: {}", rep.reject_reason.clone().unwrap_or_default()));
            }
            let ratio = rep.max_ratio();
            r.report(format!("max ratio tau={tau:.3e}"), ratio);
            ratios.push((tau, ratio));
        }
        if failures == cfg.experiment.ladder_rungs {
            r.fail("Picard iteration failed at every rung");
        }
        let worst = ratios.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
        if ratios.len() > 1 {
            r.check("max ratio increase down the ladder", worst, format!("≤ {LADDER_MONOTONE_SLACK:e}"), worst <= LADDER_MONOTONE_SLACK);
        }
        let best = ratios.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        r.check("smallest rung max ratio", best, format!("≤ {LADDER_CONTRACTION}"), best <= LADDER_CONTRACTION);

        let eps0 = holder_norm(problem.ops(), &phi0, 2, &params)?;
        if eps0 == 0.0 {
            r.note("phi0 = 0: Lipschitz surrogate undefined, scaling check skipped");
            return Ok(());
        }
        let phi2 = phi0.scaled(0.9);
        let mut pts = Vec::new();
        for &(tau, _) in &ratios {
            match problem.lipschitz_surrogate(&phi0, &phi2, tau, &params) {
                Ok(l) => pts.push((eps0 + tau.powf(0.25), l)),
                Err(e) => r.note(format!("surrogate at tau = {tau:e}: {e}")),
            }
        }
        match log_log_slope(&pts) {
            Some(s) => {
                r.check("surrogate slope vs eps0 + tau^(1/4)", s, "> 0", s > 0.0);
            }
            None => r.fail("surrogate scaling needs two finite points"),
        }
        Ok(())
    })
}

/// Metric bounds and running curvature maximum along a surface run.
pub fn experiment_extension_monitor(cfg: &RunConfig) -> Result<ExperimentResult> {
    timed("monitor", |r| {
        if cfg.n != 2 {
            r.fail(format!("the extension monitor needs n = 2, got n = {}", cfg.n));
            return Ok(());
        }
        let problem = cfg.problem()?;
        let controls = cfg.controls(&problem);
        let run = problem.run_flow(cfg.initial_potential()?, &controls);
        status_note(r, &run);
        let rows = &run.rows;
        if breakdown(run.state.status) || rows.is_empty() {
            let last = rows.last().copied().unwrap_or_default();
            r.fail(format!(
                "{} with last (c1, C2, Q) = ({}, {}, {})",
                run.state.status,
                last.c1_bound,
                last.c2_bound,
                rows.iter().map(|x| x.max_riemann).fold(0.0, f64::max)
            ));
            r.runs.push(("flow".into(), run.rows));
            return Ok(());
        }
        let (lo, hi) = (cfg.experiment.c1_min, cfg.experiment.c2_max);
        let c1 = rows.iter().map(|x| x.c1_bound).fold(f64::INFINITY, f64::min);
        let c2 = rows.iter().map(|x| x.c2_bound).fold(0.0, f64::max);
        r.report("min c1", c1);
        r.report("max C2", c2);
        let in_band = rows.iter().filter(|x| x.c1_bound >= lo && x.c2_bound <= hi).count();
        r.report("rows within metric band", in_band as f64);
        r.report("rows", rows.len() as f64);
        let ceiling = rows.iter().take(MONITOR_DECADE_ROWS).map(|x| x.max_riemann).fold(0.0, f64::max);
        let q = rows
            .iter()
            .filter(|x| x.c1_bound >= lo && x.c2_bound <= hi)
            .map(|x| x.max_riemann)
            .fold(0.0, f64::max);
        r.report("initial-decade ceiling of max|Rm|", ceiling);
        r.check("running max|Rm| within band", q, "≤ initial-decade ceiling", q <= ceiling * (1.0 + 1e-12));
        check_class_invariants(r, rows, controls.energy_slack);
        r.runs.push(("flow".into(), run.rows));
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_config_str;
    use std::path::Path;

    fn cfg(text: &str) -> RunConfig {
        parse_config_str(text, Path::new(".")).unwrap()
    }

    #[test]
    fn zero_data_is_trivially_converged() {
        let c = cfg("[lattice]\nn = 1\nN = 16\nL = 1\n");
        let r = experiment_stability(&c).unwrap();
        assert!(r.pass, "{r}");
        assert_eq!(r.runs[0].1.len(), 1);
    }

    #[test]
    fn non_positive_data_fails_stability() {
        let c = cfg("[lattice]\nn = 1\nN = 16\nL = 1\n[initial]\nmode = 1 0 1.0\n");
        let r = experiment_stability(&c).unwrap();
        assert!(!r.pass);
        assert!(r.notes.iter().any(|n| n.contains("PositivityBreakdown")), "{r}");
    }

    #[test]
    fn zero_data_contraction_is_degenerate_pass() {
        let c = cfg("[lattice]\nn = 1\nN = 16\nL = 1\n");
        let r = experiment_contraction_ladder(&c).unwrap();
        assert!(r.pass, "{r}");
        assert!(r.measurements.iter().filter(|m| m.name.starts_with("max ratio")).all(|m| m.value == 0.0));
    }

    #[test]
    fn zero_data_smoothing_sup_is_zero() {
        let c = cfg("[lattice]\nn = 1\nN = 16\nL = 1\n[stepper]\nt_end = 0.01\n");
        let r = experiment_smoothing(&c).unwrap();
        assert!(r.pass, "{r}");
        assert!(r.measurements.iter().filter(|m| m.name.starts_with("c_meas")).all(|m| m.value == 0.0));
    }

    #[test]
    fn smoothing_constant_is_linear_in_small_data() {
        let c = cfg("[lattice]\nn = 1\nN = 32\nL = 1\n[stepper]\ntau0 = 1e-7\nt_end = 0.02\nconvergence_tol = 1e-14\n");
        let modes = rough_modes(1, 6, 1e-4, 9);
        let doubled: Vec<Mode> = modes.iter().map(|m| Mode { amplitude: 2.0 * m.amplitude, ..m.clone() }).collect();
        let (a, _, _) = smoothing_constants(&c, &modes, None).unwrap();
        let (b, _, _) = smoothing_constants(&c, &doubled, None).unwrap();
        assert!(a > 0.0 && (b / a - 1.0).abs() < 0.05, "{a} {b}");
    }

    #[test]
    fn flat_start_monitor_has_unit_bounds_and_no_curvature() {
        let c = cfg("[lattice]\nn = 2\nN = 8\nL = 1\n[stepper]\nt_end = 0.01\nconvergence_tol = 0\nmax_steps = 6\n");
        let r = experiment_extension_monitor(&c).unwrap();
        let rows = &r.runs[0].1;
        assert!(rows.iter().all(|x| x.c1_bound == 1.0 && x.c2_bound == 1.0 && x.max_riemann == 0.0));
        assert!(r.pass, "{r}");
    }

    #[test]
    fn monitor_rejects_curves() {
        let r = experiment_extension_monitor(&cfg("[lattice]\nn = 1\nN = 8\nL = 1\n")).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<_> = (1..6).map(|i| (i as f64, 3.0 * (i as f64).powf(1.5))).collect();
        assert!((log_log_slope(&pts).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
    }

    #[test]
    fn energy_and_volume_helpers() {
        let row = |ca: f64, vol: f64| DiagnosticsRow { calabi_energy: ca, volume: vol, ..Default::default() };
        let rows = [row(1.0, 2.0), row(0.5, 2.0), row(0.75, 2.0 + 2e-8)];
        assert!((max_energy_increase(&rows) - 0.25 / 1.5).abs() < 1e-15);
        assert!((max_volume_drift(&rows) - 1e-8).abs() < 1e-15);
    }
}
