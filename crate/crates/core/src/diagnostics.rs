//! Per-step monitored quantities and experiment result records.

use std::fmt;
use std::time::Duration;

/// Column names in emission order.
pub const DIAGNOSTICS_HEADER: [&str; 15] = [
    "t",
    "tau",
    "calabi_energy",
    "max_abs_R",
    "rbar",
    "volume",
    "c1_bound",
    "c2_bound",
    "max_riemann",
    "holder_2a",
    "holder_4a",
    "weighted_norm",
    "picard_iters",
    "picard_last_ratio",
    "phi_mean",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub tau: f64,
    pub calabi_energy: f64,
    pub max_abs_r: f64,
    pub rbar: f64,
    pub volume: f64,
    pub c1_bound: f64,
    pub c2_bound: f64,
    pub max_riemann: f64,
    pub holder_2a: f64,
    pub holder_4a: f64,
    pub weighted_norm: f64,
    pub picard_iters: u64,
    pub picard_last_ratio: f64,
    pub phi_mean: f64,
}

impl DiagnosticsRow {
    /// Real-valued columns in header order, with `picard_iters` converted.
    pub fn values(&self) -> [f64; 15] {
        [
            self.t,
            self.tau,
            self.calabi_energy,
            self.max_abs_r,
            self.rbar,
            self.volume,
            self.c1_bound,
            self.c2_bound,
            self.max_riemann,
            self.holder_2a,
            self.holder_4a,
            self.weighted_norm,
            self.picard_iters as f64,
            self.picard_last_ratio,
            self.phi_mean,
        ]
    }

    /// Checks `Ca ≥ 0`, `0 < c1 ≤ C2`, `volume > 0`, and finiteness; returns the first violation.
    pub fn check_invariants(&self) -> Option<String> {
        if let Some((i, v)) = self.values().iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Some(format!("{} is not finite ({v})", DIAGNOSTICS_HEADER[i]));
        }
        if self.calabi_energy < 0.0 {
            return Some(format!("calabi_energy {} < 0", self.calabi_energy));
        }
        if !(self.c1_bound > 0.0 && self.c1_bound <= self.c2_bound) {
            return Some(format!("metric bounds c1 = {} C2 = {} out of order", self.c1_bound, self.c2_bound));
        }
        if !(self.volume > 0.0) {
            return Some(format!("volume {} not positive", self.volume));
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition, empty for report-only values.
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub name: String,
    pub pass: bool,
    pub measurements: Vec<Measurement>,
    pub notes: Vec<String>,
    pub wall_clock: Duration,
    /// Labelled diagnostics series produced along the way.
    pub runs: Vec<(String, Vec<DiagnosticsRow>)>,
}

impl ExperimentResult {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), pass: true, measurements: Vec::new(), notes: Vec::new(), wall_clock: Duration::ZERO, runs: Vec::new() }
    }

    /// Records a gated value; any failing check fails the experiment.
    pub fn check(&mut self, name: impl Into<String>, value: f64, tolerance: impl Into<String>, pass: bool) -> bool {
        self.pass &= pass;
        self.measurements.push(Measurement { name: name.into(), value, tolerance: tolerance.into(), pass });
        pass
    }

    /// Records a report-only value.
    pub fn report(&mut self, name: impl Into<String>, value: f64) {
        self.measurements.push(Measurement { name: name.into(), value, tolerance: String::new(), pass: true });
    }

    pub fn fail(&mut self, note: impl Into<String>) {
        self.pass = false;
        self.notes.push(note.into());
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn failures(&self) -> impl Iterator<Item = &Measurement> {
        self.measurements.iter().filter(|m| !m.pass)
    }
}

impl fmt::Display for ExperimentResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} ({:.2} s)",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.wall_clock.as_secs_f64()
        )?;
        for m in &self.measurements {
            if m.tolerance.is_empty() {
                writeln!(f, "  {:<36} {:>14.6e}", m.name, m.value)?;
            } else {
                writeln!(
                    f,
                    "  {:<36} {:>14.6e}  [{}] {}",
                    m.name,
                    m.value,
                    m.tolerance,
                    if m.pass { "ok" } else { "VIOLATED" }
                )?;
            }
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}
