//! Acceptance criteria, run sequentially so wall-clock limits are measured without contention.
//! Prints one `PASS`/`FAIL` line per criterion and exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use calabi_core::diagnostics::ExperimentResult;
use calabi_core::experiments::{
    experiment_contraction_ladder, experiment_extension_monitor, experiment_linear_spectrum, experiment_smoothing,
    experiment_stability, max_energy_increase, max_volume_drift,
};
use calabi_core::io::{parse_config, read_csv, InitialSpec, RunConfig};
use calabi_core::metric::positivity_check;
use calabi_core::verify::{dual_formula_errors, forcing_corpus, identity_residuals, CORPUS_SEED};
use calabi_core::Mode;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn value(r: &ExperimentResult, name: &str) -> f64 {
    r.measurements.iter().find(|m| m.name == name).unwrap_or_else(|| panic!("{} lacks `{name}`", r.name)).value
}

fn failures(r: &ExperimentResult) -> String {
    let mut parts: Vec<String> = r.failures().map(|m| format!("{} = {:e} violates {}", m.name, m.value, m.tolerance)).collect();
    parts.extend(r.notes.iter().cloned());
    parts.join("; ")
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn linear_spectrum() -> Outcome {
    let cfg = config("spectrum_n1.cfg");
    assert_eq!((cfg.n, cfg.size, cfg.period), (1, 64, 1.0));
    let start = Instant::now();
    let r = experiment_linear_spectrum(&cfg).expect("spectrum config is valid");
    let elapsed = start.elapsed();
    let pi4 = std::f64::consts::PI.powi(4);
    let mut pass = r.pass && within(elapsed, 10.0);
    let mut detail = Vec::new();
    for (label, target) in [("mode_1_0", pi4), ("mode_0_1", pi4), ("mode_2_0", 16.0 * pi4)] {
        let rate = value(&r, &format!("{label} fitted rate"));
        let rel = (rate / target - 1.0).abs();
        pass &= rel <= 0.02;
        detail.push(format!("{label} rate {rate:.4} (target {target:.4}, rel {rel:.1e})"));
    }
    outcome(pass, format!("{}; {:.2} s < 10 s", detail.join(", "), elapsed.as_secs_f64()))
}

fn dual_formula() -> Outcome {
    let start = Instant::now();
    let corpus = forcing_corpus(CORPUS_SEED).expect("corpus builds");
    let count: usize = corpus.iter().map(|(_, f)| f.len()).sum();
    let errs = dual_formula_errors(&corpus).expect("corpus fields are positive definite");
    let elapsed = start.elapsed();
    let pass = count == 20 && errs.iter().all(|&(_, e)| e < 1e-6) && within(elapsed, 30.0);
    let desc: Vec<String> = errs.iter().map(|(n, e)| format!("n={n} max rel L2 {e:.2e}")).collect();
    outcome(pass, format!("{count} fields: {} (< 1e-6); {:.2} s < 30 s", desc.join(", "), elapsed.as_secs_f64()))
}

fn identity_residual() -> Outcome {
    let corpus = forcing_corpus(CORPUS_SEED).expect("corpus builds");
    let res = identity_residuals(&corpus).expect("corpus fields are positive definite");
    let pass = res.iter().all(|&(n, e)| e < if n == 1 { 1e-9 } else { 1e-8 });
    let desc: Vec<String> = res.iter().map(|(n, e)| format!("n={n} residual {e:.2e}")).collect();
    outcome(pass, format!("{} (< 1e-9 / 1e-8)", desc.join(", ")))
}

struct StabilityRun {
    result: ExperimentResult,
    elapsed: Duration,
}

fn stability_run() -> StabilityRun {
    let cfg = config("stability_n1.cfg");
    assert_eq!((cfg.n, cfg.size), (1, 64));
    let InitialSpec::Modes(m) = &cfg.initial else { panic!("stability config uses modes") };
    assert!(m.len() == 2 && m.iter().all(|m| m.amplitude.abs() <= 0.05));
    let start = Instant::now();
    let result = experiment_stability(&cfg).expect("stability config is valid");
    StabilityRun { result, elapsed: start.elapsed() }
}

fn dissipation(s: &StabilityRun) -> Outcome {
    let rows = &s.result.runs[0].1;
    let inc = max_energy_increase(rows);
    let pass = rows.len() > 1 && inc <= 1e-10 && within(s.elapsed, 60.0);
    outcome(
        pass,
        format!(
            "{} accepted steps, max (Ca_next - Ca)/(1 + Ca) = {inc:.2e} (≤ 1e-10); {:.2} s < 60 s",
            rows.len() - 1,
            s.elapsed.as_secs_f64()
        ),
    )
}

fn class_invariants(s: &StabilityRun) -> Outcome {
    let rows = &s.result.runs[0].1;
    let drift = max_volume_drift(rows);
    let rbar = rows.iter().map(|r| r.rbar.abs()).fold(0.0, f64::max);
    outcome(drift <= 1e-8 && rbar <= 1e-8, format!("volume drift {drift:.2e} (≤ 1e-8), max |rbar| {rbar:.2e} (≤ 1e-8)"))
}

fn stability(s: &StabilityRun) -> Outcome {
    let r = &s.result;
    let converged = value(r, "converged") == 1.0;
    let r2 = value(r, "max|R| exponential fit r2");
    let osc = value(r, "final |phi - mean(phi)|_inf");
    let pass = converged && r2 >= 0.99 && osc <= 1e-6;
    let mut detail = format!("converged = {converged}, fit r2 = {r2:.6} (≥ 0.99), final oscillation {osc:.2e} (≤ 1e-6)");
    if !pass {
        detail = format!("{detail}; {}", failures(r));
    }
    outcome(pass, detail)
}

fn contraction() -> Outcome {
    let cfg = config("contraction_n1.cfg");
    let InitialSpec::Modes(m) = &cfg.initial else { panic!("contraction config uses modes") };
    assert!(m.len() == 1 && m[0].amplitude == 0.01);
    let r = experiment_contraction_ladder(&cfg).expect("contraction config is valid");
    let ratios: Vec<f64> = r.measurements.iter().filter(|m| m.name.starts_with("max ratio tau")).map(|m| m.value).collect();
    let monotone = ratios.windows(2).all(|w| w[1] <= w[0] + 1e-3);
    let best = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let pass = monotone && best <= 0.5 && ratios.len() == 9;
    let list: Vec<String> = ratios.iter().map(|x| format!("{x:.3}")).collect();
    outcome(pass, format!("ratios [{}], non-increasing (+1e-3) = {monotone}, min {best:.3e} (≤ 0.5)", list.join(", ")))
}

fn smoothing() -> Outcome {
    let cfg = config("smoothing_n1.cfg");
    let r = experiment_smoothing(&cfg).expect("smoothing config is valid");
    let c32 = value(&r, "c_meas N=32");
    let c64 = value(&r, "c_meas N=64");
    let rel = (c64 / c32 - 1.0).abs();
    let pass = c32.is_finite() && c64.is_finite() && c32 > 0.0 && rel <= 0.2;
    outcome(pass, format!("c_meas {c32:.4} (N=32), {c64:.4} (N=64), relative change {rel:.2e} (≤ 0.2)"))
}

fn surface_monitor() -> Outcome {
    let cfg = config("monitor_n2.cfg");
    assert_eq!((cfg.n, cfg.size), (2, 16));
    let start = Instant::now();
    let r = experiment_extension_monitor(&cfg).expect("monitor config is valid");
    let elapsed = start.elapsed();
    let rows = r.runs.first().map(|x| x.1.clone()).unwrap_or_default();
    let decreasing = rows.len() > 1 && max_energy_increase(&rows) <= 1e-10;
    let c1 = rows.iter().map(|x| x.c1_bound).fold(f64::INFINITY, f64::min);
    let c2 = rows.iter().map(|x| x.c2_bound).fold(0.0, f64::max);
    let banded = rows.iter().all(|x| 0.5 <= x.c1_bound && x.c1_bound <= x.c2_bound && x.c2_bound <= 2.0);
    let ceiling = rows.iter().take(10).map(|x| x.max_riemann).fold(0.0, f64::max);
    let q = rows.iter().map(|x| x.max_riemann).fold(0.0, f64::max);
    let pass = r.pass && decreasing && banded && q <= ceiling && within(elapsed, 600.0);
    let mut detail = format!(
        "{} rows, Ca non-increasing = {decreasing}, c1 ∈ [{c1:.4}, ·], C2 ≤ {c2:.4} (band [0.5, 2]), max|Rm| {q:.4e} ≤ ceiling {ceiling:.4e}; {:.1} s < 600 s",
        rows.len(),
        elapsed.as_secs_f64()
    );
    if !r.pass {
        detail = format!("{detail}; {}", failures(&r));
    }
    outcome(pass, detail)
}

fn infrastructure() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_calabi"))
        .args(["verify", "--quiet", "--output", dir.path().to_str().unwrap()])
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    let code = out.status.code();
    let results = std::fs::read_to_string(dir.path().join("verify_results.csv")).unwrap_or_default();
    let failed: Vec<&str> = results.lines().filter(|l| l.ends_with(",fail")).collect();
    let pass = code == Some(0) && failed.is_empty() && within(elapsed, 60.0);
    outcome(pass, format!("`calabi verify` exit {code:?}, failing checks {failed:?}; {:.2} s < 60 s", elapsed.as_secs_f64()))
}

fn guard() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let out = Command::new(env!("CARGO_BIN_EXE_calabi"))
        .args(["run", "--config", config_path("degenerate_n1.cfg").to_str().unwrap(), "--output", dir.path().to_str().unwrap()])
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    let status_ok = stdout.contains("status: PositivityBreakdown");
    let nan_free = !stdout.to_lowercase().contains("nan");
    let exit_one = out.status.code() == Some(1);

    // metric 1 − π²a·cos(2πx) with minimum eigenvalue 0.05 at t = 0
    let mut near = config("degenerate_n1.cfg");
    let a = 0.95 / std::f64::consts::PI.powi(2);
    near.initial = InitialSpec::Modes(vec![Mode::cos(vec![1, 0], a)]);
    near.t_end = 1e-3;
    near.max_steps = 500;
    near.holder_diagnostics = false;
    let problem = near.problem().expect("valid problem");
    let phi0 = near.initial_potential().unwrap();
    let min_eig = positivity_check(&problem.metric(&phi0), 0.0).min_eig;
    let run = problem.run_flow(phi0, &near.controls(&problem));
    let near_ok = run.state.phi.field().is_finite()
        && run.rows.iter().all(|r| r.values().iter().all(|v| v.is_finite()));

    // breakdown before the first accepted step leaves no diagnostics file
    let csv_ok = read_csv(&dir.path().join("diagnostics.csv")).is_err();
    let pass = status_ok && nan_free && exit_one && near_ok && csv_ok;
    outcome(
        pass,
        format!(
            "indefinite start: PositivityBreakdown = {status_ok}, exit {:?}, NaN-free = {nan_free}; near-degenerate start (min eigenvalue {min_eig:.3}): {} at t = {:.3e}, {} attempts, finite = {near_ok}",
            out.status.code(),
            run.state.status,
            run.state.t,
            run.state.attempts
        ),
    )
}

fn main() -> ExitCode {
    // numeric arguments select criteria; none selects all
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |id: usize| only.is_empty() || only.contains(&id);
    let mut all = true;
    let mut report = |id: usize, name: &str, run: &dyn Fn() -> Outcome| {
        if !selected(id) {
            return;
        }
        let o = run();
        all &= o.pass;
        println!("criterion {id:>2} {name:<24} {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "linear-spectrum", &linear_spectrum);
    report(2, "dual-forcing-formula", &dual_formula);
    report(3, "fourth-order-identity", &identity_residual);
    let s = std::cell::OnceCell::new();
    let stab = || s.get_or_init(stability_run);
    report(4, "energy-dissipation", &|| dissipation(stab()));
    report(5, "class-invariants", &|| class_invariants(stab()));
    report(6, "stability", &|| stability(stab()));
    report(7, "contraction-ladder", &contraction);
    report(8, "smoothing-refinement", &smoothing);
    report(9, "surface-monitor", &surface_monitor);
    report(10, "infrastructure-verify", &infrastructure);
    report(11, "positivity-guard", &guard);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
