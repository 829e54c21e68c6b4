//! Line-oriented run configuration.
//!
//! ```text
//! # comment
//! [lattice]
//! n = 1                 # complex dimension, 1 or 2
//! N = 64                # points per real axis, power of two ≥ 8
//! L = 2pi               # period; a number, optionally followed by `pi`
//!
//! [reference]
//! g0 = 1                # n = 1: a; n = 2: a | a b_re b_im d
//! psi = 1 0 0.01 0.0    # repeatable: 2n integers, amplitude, optional phase
//!
//! [initial]
//! mode = 1 0 0.05       # repeatable, same grammar as psi; no modes means φ₀ = 0
//! snapshot = phi0.grd   # alternative to modes, relative to the config file
//!
//! [stepper]
//! alpha tau0 tau_min tau_max t_end max_steps picard_tol picard_max_iters
//! convergence_tol energy_slack holder_diagnostics holder_stride   (convergence_tol = 0 disables the stop)
//!
//! [output]
//! dir snapshot_every seed
//!
//! [experiment]
//! epsilon c1_min c2_max rough_max_mode rough_amplitude ladder_rungs
//! ```
//!
//! Every key is optional except `n`, `N`, `L`. Unknown sections and keys are errors.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex;

use crate::error::{CalabiError, Result};
use crate::flow::{FlowControls, FlowProblem};
use crate::lattice::{Mode, ScalarField, TorusLattice};
use crate::linalg::SmallMatrix;
use crate::metric::ReferenceGeometry;
use crate::spectral::SpectralOps;

use super::snapshot::read_snapshot;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Modes(Vec<Mode>),
    Snapshot(PathBuf),
}

/// Calibrated thresholds of the packaged experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    /// Largest admissible `‖φ₀‖_{2,α}` for the stability run.
    pub epsilon: f64,
    /// Metric band `[c1_min, c2_max]` watched by the extension monitor.
    pub c1_min: f64,
    pub c2_max: f64,
    /// Rough smoothing data on frequencies `1..=rough_max_mode`; `0` uses `[initial]`.
    pub rough_max_mode: i64,
    pub rough_amplitude: f64,
    /// Rungs `τ₀, τ₀/2, …` of the contraction ladder.
    pub ladder_rungs: usize,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self { epsilon: 1.0, c1_min: 0.5, c2_max: 2.0, rough_max_mode: 0, rough_amplitude: 1e-3, ladder_rungs: 9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub size: usize,
    pub period: f64,
    pub g0: SmallMatrix<f64>,
    pub psi: Vec<Mode>,
    pub initial: InitialSpec,
    pub alpha: f64,
    pub tau0: f64,
    pub tau_min: f64,
    /// `None` selects `1/λ_min⁺`.
    pub tau_max: Option<f64>,
    pub t_end: f64,
    pub max_steps: usize,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub convergence_tol: f64,
    pub energy_slack: f64,
    pub holder_diagnostics: bool,
    pub holder_stride: Option<usize>,
    pub output_dir: PathBuf,
    /// Write a snapshot every this many accepted steps; `0` writes only the final one.
    pub snapshot_every: usize,
    pub seed: u64,
    pub experiment: ExperimentParams,
}

impl RunConfig {
    /// Defaults around a lattice; `g0 = I`, `ψ = 0`, `φ₀ = 0`.
    pub fn new(n: usize, size: usize, period: f64) -> Self {
        Self {
            n,
            size,
            period,
            g0: SmallMatrix::identity(n),
            psi: Vec::new(),
            initial: InitialSpec::Modes(Vec::new()),
            alpha: 0.5,
            tau0: 1e-4,
            tau_min: 1e-12,
            tau_max: None,
            t_end: 1.0,
            max_steps: 100_000,
            picard_tol: 1e-12,
            picard_max_iters: 50,
            convergence_tol: 1e-8,
            energy_slack: 1e-10,
            holder_diagnostics: true,
            holder_stride: None,
            output_dir: PathBuf::from("out"),
            snapshot_every: 0,
            seed: 20_240_601,
            experiment: ExperimentParams::default(),
        }
    }

    pub fn lattice(&self) -> Result<TorusLattice<f64>> {
        TorusLattice::new(self.n, self.size, self.period)
    }

    pub fn with_size(&self, size: usize) -> Self {
        Self { size, ..self.clone() }
    }

    pub fn problem(&self) -> Result<FlowProblem<f64>> {
        let lat = self.lattice()?;
        let psi = ScalarField::from_modes(lat, &self.psi)?;
        FlowProblem::with_default_floor(SpectralOps::new(lat), ReferenceGeometry::new(self.g0, psi)?)
    }

    pub fn controls(&self, problem: &FlowProblem<f64>) -> FlowControls {
        let defaults = FlowControls::for_problem(problem);
        FlowControls {
            tau0: self.tau0,
            tau_min: self.tau_min,
            tau_max: self.tau_max.unwrap_or(defaults.tau_max),
            t_end: self.t_end,
            max_steps: self.max_steps,
            picard_tol: self.picard_tol,
            picard_max_iters: self.picard_max_iters,
            convergence_tol: self.convergence_tol,
            energy_slack: self.energy_slack,
            holder_diagnostics: self.holder_diagnostics,
            alpha: self.alpha,
            holder_stride: self.holder_stride,
        }
    }

    /// `φ₀` sampled on this config's lattice.
    pub fn initial_potential(&self) -> Result<ScalarField<f64>> {
        let lat = self.lattice()?;
        match &self.initial {
            InitialSpec::Modes(modes) => ScalarField::from_modes(lat, modes),
            InitialSpec::Snapshot(path) => {
                let (field, header) = read_snapshot(path)?;
                if header.n != self.n || header.size != self.size || header.period != self.period {
                    return Err(CalabiError::Format(format!(
                        "snapshot {} has n = {}, N = {}, L = {} but the config declares n = {}, N = {}, L = {}",
                        path.display(),
                        header.n,
                        header.size,
                        header.period,
                        self.n,
                        self.size,
                        self.period
                    )));
                }
                Ok(field)
            }
        }
    }

    fn validate(&self, line: usize) -> Result<()> {
        let err = |msg: String| Err(CalabiError::Config { line, msg });
        if let Err(e) = self.lattice() {
            return err(e.to_string());
        }
        let half = (self.size / 2) as i64;
        for m in self.psi.iter().chain(match &self.initial {
            InitialSpec::Modes(m) => m.iter(),
            InitialSpec::Snapshot(_) => [].iter(),
        }) {
            if m.k.len() != 2 * self.n {
                return err(format!("mode {:?} needs {} integer frequencies", m.k, 2 * self.n));
            }
            if m.k.iter().any(|&k| k <= -half || k > half) {
                return err(format!("mode frequency {:?} outside (-N/2, N/2] for N = {}", m.k, self.size));
            }
        }
        if self.g0.dim() != self.n {
            return err(format!("g0 is {0}x{0} but n = {1}", self.g0.dim(), self.n));
        }
        let (lo, _) = self.g0.hermitian_eigenvalues();
        if !(lo > 0.0) {
            return err(format!("g0 is not positive definite (min eigenvalue {lo})"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return err(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.tau0 > 0.0 && self.tau_min > 0.0 && self.tau_min <= self.tau0) {
            return err(format!("need 0 < tau_min ≤ tau0, got tau_min = {} tau0 = {}", self.tau_min, self.tau0));
        }
        if let Some(m) = self.tau_max {
            if !(m >= self.tau0) {
                return err(format!("tau_max = {m} must be at least tau0 = {}", self.tau0));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return err(format!("t_end must be finite and non-negative, got {}", self.t_end));
        }
        for (name, v) in [
            ("picard_tol", self.picard_tol),
            ("rough_amplitude", self.experiment.rough_amplitude),
            ("epsilon", self.experiment.epsilon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return err(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.energy_slack >= 0.0) {
            return err(format!("energy_slack must be non-negative, got {}", self.energy_slack));
        }
        if !(self.convergence_tol >= 0.0) {
            return err(format!("convergence_tol must be non-negative, got {}", self.convergence_tol));
        }
        if self.max_steps == 0 || self.picard_max_iters == 0 || self.experiment.ladder_rungs == 0 {
            return err("max_steps, picard_max_iters and ladder_rungs must be positive".into());
        }
        if self.holder_stride == Some(0) {
            return err("holder_stride must be positive".into());
        }
        if !(0.0 < self.experiment.c1_min && self.experiment.c1_min <= 1.0 && self.experiment.c2_max >= 1.0) {
            return err(format!(
                "need 0 < c1_min ≤ 1 ≤ c2_max, got {} and {}",
                self.experiment.c1_min, self.experiment.c2_max
            ));
        }
        if self.experiment.rough_max_mode < 0 || self.experiment.rough_max_mode > half - 1 {
            return err(format!("rough_max_mode must lie in [0, N/2 - 1], got {}", self.experiment.rough_max_mode));
        }
        Ok(())
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Parses config text; relative snapshot paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let mut section = String::new();
    let mut lattice: [Option<(usize, f64)>; 3] = [None; 3];
    let mut g0: Option<(usize, Vec<f64>)> = None;
    let mut psi = Vec::new();
    let mut modes = Vec::new();
    let mut snapshot: Option<(usize, PathBuf)> = None;
    let mut rest: Vec<(usize, String, String, String)> = Vec::new();
    let mut last = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |msg: String| CalabiError::Config { line, msg };
        if let Some(name) = content.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| err(format!("malformed section header `{content}`")))?;
            if !["lattice", "reference", "initial", "stepper", "output", "experiment"].contains(&name) {
                return Err(err(format!("unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match (section.as_str(), key) {
            ("", _) => return Err(err(format!("key `{key}` outside any section"))),
            ("lattice", "n" | "N" | "L") => {
                let slot = ["n", "N", "L"].iter().position(|k| *k == key).expect("matched above");
                if lattice[slot].is_some() {
                    return Err(err(format!("duplicate key `{key}`")));
                }
                let v = if key == "L" { parse_period(value, line)? } else { parse_num::<usize>(value, key, line)? as f64 };
                lattice[slot] = Some((line, v));
            }
            ("reference", "g0") => {
                let v = value.split_whitespace().map(|t| parse_num::<f64>(t, key, line)).collect::<Result<Vec<_>>>()?;
                g0 = Some((line, v));
            }
            ("reference", "psi") => psi.push((line, parse_mode(value, line)?)),
            ("initial", "mode") => modes.push((line, parse_mode(value, line)?)),
            ("initial", "snapshot") => snapshot = Some((line, base_dir.join(value))),
            ("stepper" | "output" | "experiment", _) => rest.push((line, section.clone(), key.to_string(), value.to_string())),
            (s, k) => return Err(err(format!("unknown key `{k}` in [{s}]"))),
        }
    }

    let require = |slot: usize, name: &str| {
        lattice[slot].ok_or_else(|| CalabiError::Config { line: last, msg: format!("missing required key `{name}` in [lattice]") })
    };
    let n = require(0, "n")?.1 as usize;
    let size = require(1, "N")?.1 as usize;
    let period = require(2, "L")?.1;
    let mut cfg = RunConfig::new(n, size, period);
    if let Err(e) = cfg.lattice() {
        let slot = if n != 1 && n != 2 {
            0
        } else if size < 8 || !size.is_power_of_two() {
            1
        } else {
            2
        };
        return Err(CalabiError::Config { line: require(slot, "")?.0, msg: e.to_string() });
    }

    if let Some((line, v)) = g0 {
        cfg.g0 = match (n, v.as_slice()) {
            (_, &[a]) => SmallMatrix::scalar(n, a),
            (2, &[a, br, bi, d]) => SmallMatrix::hermitian2(a, Complex::new(br, bi), d),
            _ => {
                return Err(CalabiError::Config { line, msg: format!("g0 takes 1 value for n = 1 and 1 or 4 values for n = 2, got {}", v.len()) })
            }
        };
    }
    cfg.psi = psi.iter().map(|(_, m)| m.clone()).collect();
    cfg.initial = match snapshot {
        Some((line, _)) if !modes.is_empty() => {
            return Err(CalabiError::Config { line, msg: "[initial] takes either modes or a snapshot, not both".into() })
        }
        Some((_, path)) => InitialSpec::Snapshot(path),
        None => InitialSpec::Modes(modes.iter().map(|(_, m)| m.clone()).collect()),
    };
    for (line, m) in psi.iter().chain(&modes) {
        if m.k.len() != 2 * n {
            return Err(CalabiError::Config { line: *line, msg: format!("mode {:?} needs {} integer frequencies for n = {n}", m.k, 2 * n) });
        }
        let half = (size / 2) as i64;
        if m.k.iter().any(|&k| k <= -half || k > half) {
            return Err(CalabiError::Config { line: *line, msg: format!("mode frequency {:?} outside (-N/2, N/2] for N = {size}", m.k) });
        }
    }

    let mut seen: Vec<&str> = Vec::new();
    for (line, declared, key, value) in &rest {
        let line = *line;
        if seen.contains(&key.as_str()) {
            return Err(CalabiError::Config { line, msg: format!("duplicate key `{key}`") });
        }
        seen.push(key);
        let v = value.as_str();
        let e = &mut cfg.experiment;
        match key.as_str() {
            "alpha" => cfg.alpha = parse_num(v, key, line)?,
            "tau0" => cfg.tau0 = parse_num(v, key, line)?,
            "tau_min" => cfg.tau_min = parse_num(v, key, line)?,
            "tau_max" => cfg.tau_max = if v == "auto" { None } else { Some(parse_num(v, key, line)?) },
            "t_end" => cfg.t_end = parse_num(v, key, line)?,
            "max_steps" => cfg.max_steps = parse_num(v, key, line)?,
            "picard_tol" => cfg.picard_tol = parse_num(v, key, line)?,
            "picard_max_iters" => cfg.picard_max_iters = parse_num(v, key, line)?,
            "convergence_tol" => cfg.convergence_tol = parse_num(v, key, line)?,
            "energy_slack" => cfg.energy_slack = parse_num(v, key, line)?,
            "holder_diagnostics" => cfg.holder_diagnostics = parse_num(v, key, line)?,
            "holder_stride" => cfg.holder_stride = if v == "auto" { None } else { Some(parse_num(v, key, line)?) },
            "dir" => cfg.output_dir = PathBuf::from(v),
            "snapshot_every" => cfg.snapshot_every = parse_num(v, key, line)?,
            "seed" => cfg.seed = parse_num(v, key, line)?,
            "epsilon" => e.epsilon = parse_num(v, key, line)?,
            "c1_min" => e.c1_min = parse_num(v, key, line)?,
            "c2_max" => e.c2_max = parse_num(v, key, line)?,
            "rough_max_mode" => e.rough_max_mode = parse_num(v, key, line)?,
            "rough_amplitude" => e.rough_amplitude = parse_num(v, key, line)?,
            "ladder_rungs" => e.ladder_rungs = parse_num(v, key, line)?,
            _ => return Err(CalabiError::Config { line, msg: format!("unknown key `{key}`") }),
        }
        let home = match key.as_str() {
            "dir" | "snapshot_every" | "seed" => "output",
            "epsilon" | "c1_min" | "c2_max" | "rough_max_mode" | "rough_amplitude" | "ladder_rungs" => "experiment",
            _ => "stepper",
        };
        if declared != home {
            return Err(CalabiError::Config { line, msg: format!("unknown key `{key}` in [{declared}]") });
        }
    }
    cfg.validate(last)?;
    Ok(cfg)
}

fn parse_num<V: std::str::FromStr>(value: &str, key: &str, line: usize) -> Result<V> {
    value.parse().map_err(|_| CalabiError::Config { line, msg: format!("cannot parse `{value}` for `{key}`") })
}

/// `1.5`, `pi`, `2pi`, `0.5 pi`.
fn parse_period(value: &str, line: usize) -> Result<f64> {
    let v = value.replace(' ', "");
    match v.strip_suffix("pi") {
        Some("") => Ok(PI),
        Some(c) => Ok(parse_num::<f64>(c, "L", line)? * PI),
        None => parse_num(&v, "L", line),
    }
}

/// `k_1 … k_{2n} amplitude [phase]`: integers first, then one or two reals.
fn parse_mode(value: &str, line: usize) -> Result<Mode> {
    let toks: Vec<&str> = value.split_whitespace().collect();
    let ints = toks.iter().take_while(|t| t.parse::<i64>().is_ok()).count();
    let err = |msg: String| CalabiError::Config { line, msg };
    // an integer amplitude would be swallowed by the frequency list
    let (ints, reals) = match toks.len() - ints {
        0 if ints >= 3 && ints % 2 == 1 => (ints - 1, &toks[ints - 1..]),
        1 | 2 => (ints, &toks[ints..]),
        _ => return Err(err(format!("malformed mode `{value}`: expected integer frequencies, amplitude, optional phase"))),
    };
    if ints != 2 && ints != 4 {
        return Err(err(format!("malformed mode `{value}`: expected 2 or 4 integer frequencies, got {ints}")));
    }
    let k = toks[..ints].iter().map(|t| t.parse::<i64>().expect("counted as integer")).collect::<Vec<_>>();
    let amplitude = parse_num::<f64>(reals[0], "amplitude", line)?;
    let phase = reals.get(1).map(|p| parse_num::<f64>(p, "phase", line)).transpose()?.unwrap_or(0.0);
    if !amplitude.is_finite() || !phase.is_finite() {
        return Err(err(format!("mode `{value}` has non-finite amplitude or phase")));
    }
    Ok(Mode::new(k, amplitude, phase))
}
