//! Flat key-value run configuration.
//!
//! Every key is a `RunConfig` field name; unknown or repeated keys are
//! rejected outright because a silently ignored typo in a physics
//! parameter is the worst possible failure mode. The snapshot written
//! next to each run parses back to a bit-identical configuration.

use anneal_core::{CoreError, Result};
use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// What the process does with the resolved configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Anneal,
    Sweep,
    Oracle,
    Theory,
    Fit,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Anneal => "anneal",
            Mode::Sweep => "sweep",
            Mode::Oracle => "oracle",
            Mode::Theory => "theory",
            Mode::Fit => "fit",
        }
    }
}

impl FromStr for Mode {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anneal" => Ok(Mode::Anneal),
            "sweep" => Ok(Mode::Sweep),
            "oracle" => Ok(Mode::Oracle),
            "theory" => Ok(Mode::Theory),
            "fit" => Ok(Mode::Fit),
            other => Err(CoreError::Config(format!(
                "mode must be one of anneal|sweep|oracle|theory|fit, got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Complete description of one run. Field names double as config keys.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub eta: f64,
    pub omega_c: f64,
    pub t_b: f64,
    pub t_a: f64,
    pub dt: f64,
    pub tau_c: f64,
    pub chi_t: usize,
    pub chi_s: usize,
    pub svd_tol: f64,
    pub conv_tol: f64,
    pub measure_points: usize,
    pub outputs: PathBuf,
    pub mode: Mode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 1.0,
            eta: 0.18,
            omega_c: 5.0,
            t_b: 1.0,
            t_a: 200.0,
            dt: 0.05,
            tau_c: 10.0,
            // Desk-scale default; 128 is the published production setting.
            chi_t: 64,
            chi_s: 64,
            svd_tol: 1e-10,
            conv_tol: 1e-8,
            measure_points: 100,
            outputs: PathBuf::from("runs"),
            mode: Mode::Anneal,
        }
    }
}

const KEYS: [&str; 14] = [
    "alpha",
    "eta",
    "omega_c",
    "T_B",
    "t_a",
    "dt",
    "tau_c",
    "chi_t",
    "chi_s",
    "svd_tol",
    "conv_tol",
    "measure_points",
    "outputs",
    "mode",
];

fn parse_real(key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| {
        CoreError::Config(format!("key {key}: expected a real number, got {value:?}"))
    })
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    value.parse::<usize>().map_err(|_| {
        CoreError::Config(format!("key {key}: expected a non-negative integer, got {value:?}"))
    })
}

impl RunConfig {
    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "alpha" => self.alpha = parse_real(key, value)?,
            "eta" => self.eta = parse_real(key, value)?,
            "omega_c" => self.omega_c = parse_real(key, value)?,
            "T_B" => self.t_b = parse_real(key, value)?,
            "t_a" => self.t_a = parse_real(key, value)?,
            "dt" => self.dt = parse_real(key, value)?,
            "tau_c" => self.tau_c = parse_real(key, value)?,
            "chi_t" => self.chi_t = parse_count(key, value)?,
            "chi_s" => self.chi_s = parse_count(key, value)?,
            "svd_tol" => self.svd_tol = parse_real(key, value)?,
            "conv_tol" => self.conv_tol = parse_real(key, value)?,
            "measure_points" => self.measure_points = parse_count(key, value)?,
            "outputs" => self.outputs = PathBuf::from(value),
            "mode" => self.mode = value.parse()?,
            other => {
                return Err(CoreError::Config(format!(
                    "unknown config key {other:?} (valid keys: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses flat `key=value` text. Blank lines and `#` comments are
    /// skipped; unknown and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(cut) => &raw[..cut],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CoreError::Config(format!("line {}: expected key=value, got {line:?}", idx + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(CoreError::Config(format!(
                    "line {}: key {key:?} assigned twice",
                    idx + 1
                )));
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    /// Applies repeatable `key=value` override arguments on top.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for item in overrides {
            let item = item.as_ref();
            let (key, value) = item.split_once('=').ok_or_else(|| {
                CoreError::Config(format!("override must be key=value, got {item:?}"))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Re-parsable snapshot with exact field names; floats print in
    /// shortest round-trip form so the snapshot reproduces the run.
    pub fn snapshot(&self) -> String {
        format!(
            "alpha = {}\neta = {}\nomega_c = {}\nT_B = {}\nt_a = {}\ndt = {}\n\
             tau_c = {}\nchi_t = {}\nchi_s = {}\nsvd_tol = {}\nconv_tol = {}\n\
             measure_points = {}\noutputs = {}\nmode = {}\n",
            self.alpha,
            self.eta,
            self.omega_c,
            self.t_b,
            self.t_a,
            self.dt,
            self.tau_c,
            self.chi_t,
            self.chi_s,
            self.svd_tol,
            self.conv_tol,
            self.measure_points,
            self.outputs.display(),
            self.mode,
        )
    }

    /// Checks ranges and the grid commensurability, returning the step
    /// count M. Runs before any compute so a bad config never costs time.
    pub fn validate(&self) -> Result<usize> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("omega_c", self.omega_c),
            ("T_B", self.t_b),
            ("t_a", self.t_a),
            ("dt", self.dt),
            ("tau_c", self.tau_c),
            ("svd_tol", self.svd_tol),
            ("conv_tol", self.conv_tol),
        ] {
            if !v.is_finite() {
                return Err(CoreError::Config(format!("{name} must be finite, got {v}")));
            }
        }
        if self.alpha <= 0.0 {
            return Err(CoreError::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if self.eta < 0.0 || !self.eta.is_finite() {
            return Err(CoreError::Config(format!("eta must be >= 0, got {}", self.eta)));
        }
        if self.omega_c <= 0.0 || self.t_b <= 0.0 || self.tau_c <= 0.0 {
            return Err(CoreError::Config(format!(
                "omega_c, T_B and tau_c must be > 0, got {}, {}, {}",
                self.omega_c, self.t_b, self.tau_c
            )));
        }
        if self.t_a <= 0.0 || self.dt <= 0.0 {
            return Err(CoreError::Config(format!(
                "t_a and dt must be > 0, got {}, {}",
                self.t_a, self.dt
            )));
        }
        let steps = self.t_a / self.dt;
        let m = steps.round();
        if (steps - m).abs() > 1e-9 * steps.max(1.0) {
            return Err(CoreError::Config(format!(
                "t_a/dt must be an integer step count, got {}/{} = {steps}",
                self.t_a, self.dt
            )));
        }
        if m < 1.0 {
            return Err(CoreError::Config("t_a must cover at least one step".into()));
        }
        if self.chi_t == 0 || self.chi_s == 0 {
            return Err(CoreError::Config("bond dimensions must be at least 1".into()));
        }
        if self.svd_tol < 0.0 {
            return Err(CoreError::Config(format!("svd_tol must be >= 0, got {}", self.svd_tol)));
        }
        if self.conv_tol <= 0.0 {
            return Err(CoreError::Config(format!("conv_tol must be > 0, got {}", self.conv_tol)));
        }
        if self.measure_points == 0 {
            return Err(CoreError::Config("measure_points must be at least 1".into()));
        }
        Ok(m as usize)
    }

    /// Rough peak resident-set estimate in bytes: influence train plus its
    /// dressed copy, the boundary train, and the zip-up workspace that
    /// briefly doubles the boundary bond.
    pub fn estimated_memory(&self) -> u64 {
        let m = (self.t_a / self.dt).round().max(1.0) as u64 + 2;
        let complex = 16u64;
        let phys = 4u64;
        let infl = m * phys * (self.chi_t as u64).pow(2) * complex;
        let bound = m * phys * (self.chi_s as u64).pow(2) * complex;
        3 * infl + 5 * bound
    }
}
