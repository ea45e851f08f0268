//! Plot-ready artifacts: one directory per run with the config snapshot,
//! the structured record, and flat CSVs. Numbers print in shortest
//! round-trip form so downstream fits see exactly what the run computed.

use crate::runner::{RunRecord, SweepOutcome};
use anneal_core::{CoreError, Result, ScalingFit};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// `trajectory.csv`: one row per measured schedule point, sorted by s.
pub fn trajectory_csv(record: &RunRecord) -> String {
    let mut out = String::from("s,energy,sx,zz\n");
    for p in &record.trajectory {
        let _ = writeln!(out, "{},{},{},{}", p.s, p.energy, p.sx, p.zz);
    }
    out
}

/// `kl_curve.csv`: relative entropy against the Gibbs-window temperature,
/// monotone in the T column.
pub fn kl_curve_csv(record: &RunRecord) -> String {
    let mut out = String::from("T,D_KL\n");
    for &(t, d) in &record.kl_curve {
        let _ = writeln!(out, "{t},{d}");
    }
    out
}

fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "nan".into(),
    }
}

/// `sweep.csv`: one row per axis value. The duration-sweep power law, when
/// available, repeats in the fit columns and is restated in full as a
/// `# fit:` footer that the fit subcommand can consume and reproduce.
pub fn sweep_csv(outcome: &SweepOutcome) -> String {
    let mut out = String::from("axis,E_exc,T_star,b_fit,stderr_b\n");
    for e in &outcome.entries {
        let (b, db) = match &outcome.fit {
            Some(f) => (opt(Some(f.b)), opt(Some(f.stderr_b))),
            None => ("nan".into(), "nan".into()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.value,
            opt(e.record.e_exc),
            opt(e.record.t_star),
            b,
            db
        );
    }
    if let Some(f) = &outcome.fit {
        let _ = writeln!(
            out,
            "# fit: a={} b={} stderr_b={} window={}..{} points={}",
            f.a, f.b, f.stderr_b, f.window.0, f.window.1, f.n_points
        );
    }
    for e in &outcome.entries {
        if let Some(fail) = &e.record.failure {
            let _ = writeln!(out, "# failed: {}={} stage={}", outcome.axis.as_str(), e.value, fail.stage);
        }
    }
    out
}

/// Writes the per-run artifact directory: `config.cfg`, `record.json`,
/// `trajectory.csv` and, when a temperature scan ran, `kl_curve.csv`.
pub fn persist_record(dir: &Path, record: &RunRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.cfg"), &record.config)?;
    let json = serde_json::to_string_pretty(record)
        .map_err(|e| CoreError::Numerical(format!("record serialization failed: {e}")))?;
    fs::write(dir.join("record.json"), json)?;
    fs::write(dir.join("trajectory.csv"), trajectory_csv(record))?;
    if !record.kl_curve.is_empty() {
        fs::write(dir.join("kl_curve.csv"), kl_curve_csv(record))?;
    }
    Ok(())
}

/// Writes the sweep summary CSV into the sweep's output directory.
pub fn persist_sweep(dir: &Path, outcome: &SweepOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("sweep.csv"), sweep_csv(outcome))?;
    Ok(())
}

/// Fit parameters restated in a sweep.csv footer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitFooter {
    pub a: f64,
    pub b: f64,
    pub stderr_b: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

impl From<&ScalingFit> for FitFooter {
    fn from(f: &ScalingFit) -> Self {
        FitFooter { a: f.a, b: f.b, stderr_b: f.stderr_b, window: f.window, n_points: f.n_points }
    }
}

fn footer_field<T: std::str::FromStr>(token: &str, key: &str) -> Result<T> {
    let rest = token.strip_prefix(key).and_then(|r| r.strip_prefix('=')).ok_or_else(|| {
        CoreError::Config(format!("fit footer: expected {key}=..., got {token:?}"))
    })?;
    rest.parse::<T>()
        .map_err(|_| CoreError::Config(format!("fit footer: cannot parse {key} from {rest:?}")))
}

fn parse_footer(line: &str) -> Result<FitFooter> {
    let body = line.trim_start_matches("# fit:").trim();
    let toks: Vec<&str> = body.split_whitespace().collect();
    if toks.len() != 5 {
        return Err(CoreError::Config(format!(
            "fit footer must carry a, b, stderr_b, window, points; got {line:?}"
        )));
    }
    let window_tok: String = footer_field(toks[3], "window")?;
    let (lo, hi) = window_tok.split_once("..").ok_or_else(|| {
        CoreError::Config(format!("fit footer: window must be lo..hi, got {window_tok:?}"))
    })?;
    let parse = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CoreError::Config(format!("fit footer: bad window bound {s:?}")))
    };
    Ok(FitFooter {
        a: footer_field(toks[0], "a")?,
        b: footer_field(toks[1], "b")?,
        stderr_b: footer_field(toks[2], "stderr_b")?,
        window: (parse(lo)?, parse(hi)?),
        n_points: footer_field(toks[4], "points")?,
    })
}

/// Reads a sweep.csv back: `(axis, E_exc)` points (rows with a nan excess
/// energy are skipped) plus the embedded fit footer when present.
pub fn read_sweep_csv(text: &str) -> Result<(Vec<(f64, f64)>, Option<FitFooter>)> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != "axis,E_exc,T_star,b_fit,stderr_b" {
        return Err(CoreError::Config(format!("unrecognized sweep.csv header: {header:?}")));
    }
    let mut points = Vec::new();
    let mut footer = None;
    for (idx, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if line.starts_with("# fit:") {
                footer = Some(parse_footer(line)?);
            }
            continue;
        }
        let mut cols = line.split(',');
        let (axis, e_exc) = match (cols.next(), cols.next()) {
            (Some(a), Some(e)) => (a, e),
            _ => {
                return Err(CoreError::Config(format!(
                    "sweep.csv row {}: expected 5 columns, got {line:?}",
                    idx + 2
                )))
            }
        };
        let a = axis.parse::<f64>().map_err(|_| {
            CoreError::Config(format!("sweep.csv row {}: bad axis value {axis:?}", idx + 2))
        })?;
        let e = e_exc.parse::<f64>().map_err(|_| {
            CoreError::Config(format!("sweep.csv row {}: bad E_exc value {e_exc:?}", idx + 2))
        })?;
        if e.is_finite() {
            points.push((a, e));
        }
    }
    Ok((points, footer))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn footer_round_trips() {
        let fit = ScalingFit {
            a: 2.25,
            b: 1.0 / 3.0,
            stderr_b: 1.5e-4,
            window: (100.0, 400.0),
            n_points: 5,
            n_excluded: 0,
        };
        let line = format!(
            "# fit: a={} b={} stderr_b={} window={}..{} points={}",
            fit.a, fit.b, fit.stderr_b, fit.window.0, fit.window.1, fit.n_points
        );
        let footer = parse_footer(&line).unwrap();
        assert_eq!(footer, FitFooter::from(&fit));
    }

    #[test]
    fn sweep_reader_skips_failed_rows_and_comments() {
        let text = "axis,E_exc,T_star,b_fit,stderr_b\n\
                    100,0.25,1.5,0.33,0.001\n\
                    150,nan,nan,0.33,0.001\n\
                    200,0.2,1.4,0.33,0.001\n\
                    # fit: a=2 b=0.33 stderr_b=0.001 window=100..200 points=2\n\
                    # failed: t_a=150 stage=fixed point at s = 1\n";
        let (points, footer) = read_sweep_csv(text).unwrap();
        assert_eq!(points, vec![(100.0, 0.25), (200.0, 0.2)]);
        assert_eq!(footer.unwrap().window, (100.0, 200.0));
        assert!(read_sweep_csv("s,energy\n").is_err());
    }
}
