//! `anneal`: dissipative quantum-annealing simulator front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 convergence failure
//! (including sweeps where every run failed), 4 partially failed sweep,
//! 1 any other runtime failure.

use anneal_cli::config::{Mode, RunConfig};
use anneal_cli::emit;
use anneal_cli::runner::{run_anneal, run_sweep, SweepAxis};
use anneal_core::{
    dephasing_coherence, ed_trotter_evolve, fit_power_law, freezing_point, predicted_exponent,
    tfic_equilibrium_energy, AnnealingSchedule, BathSpec, CoreError, Freezing, FreezingModel,
    TimeGrid,
};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "anneal", version, about = "Dissipative transverse-field Ising chain annealer")]
struct Cli {
    /// Flat key=value configuration file; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `outputs`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Parallel worker cap for sweeps; each run stays sequential.
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    jobs: usize,
    /// Print the resolved configuration and estimated memory, then exit.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Repeatable key=value override applied after the config file.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one full anneal and persist its record.
    Anneal,
    /// Run one anneal per axis value and summarize.
    Sweep {
        /// Swept parameter: t_a, eta or alpha.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values (at least two).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Print a reference curve from the small-system oracles as CSV.
    Oracle {
        /// trajectory | equilibrium | classical | dephasing
        #[arg(long, default_value = "trajectory")]
        which: String,
        /// Chain length for the exact-diagonalization trajectory.
        #[arg(long, default_value_t = 12)]
        sites: usize,
    },
    /// Print the closed-form freezing predictions for the configuration.
    Theory,
    /// Refit a sweep.csv and check any embedded fit footer.
    Fit {
        /// Path to a sweep.csv produced by the sweep subcommand.
        csv: PathBuf,
        /// Fit window lo..hi; defaults to the footer's, then the data range.
        #[arg(long)]
        window: Option<String>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CoreError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::parse(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&cli.overrides)?;
    cfg.mode = match cli.cmd {
        Command::Anneal => Mode::Anneal,
        Command::Sweep { .. } => Mode::Sweep,
        Command::Oracle { .. } => Mode::Oracle,
        Command::Theory => Mode::Theory,
        Command::Fit { .. } => Mode::Fit,
    };
    if let Some(out) = &cli.out {
        cfg.outputs = out.clone();
    }
    Ok(cfg)
}

fn code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::Config(_) | CoreError::Domain(_) => 2,
        CoreError::Convergence { .. } => 3,
        _ => 1,
    }
}

fn run() -> Result<u8, CoreError> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;

    if cli.dry_run {
        print!("{}", cfg.snapshot());
        let m = cfg.validate()?;
        let bytes = cfg.estimated_memory();
        println!("# steps M = {m}");
        println!("# estimated peak memory = {:.1} MiB", bytes as f64 / (1024.0 * 1024.0));
        return Ok(0);
    }

    match &cli.cmd {
        Command::Anneal => {
            let record = run_anneal(&cfg)?;
            emit::persist_record(&cfg.outputs, &record)?;
            println!("record written to {}", cfg.outputs.display());
            match &record.failure {
                None => Ok(0),
                Some(f) => {
                    eprintln!("run failed in stage {}: {}", f.stage, f.message);
                    Ok(if f.stage.starts_with("fixed point") { 3 } else { 1 })
                }
            }
        }
        Command::Sweep { axis, values } => {
            let axis = SweepAxis::parse(axis)?;
            let outcome = run_sweep(&cfg, axis, values, cli.jobs)?;
            emit::persist_sweep(&cfg.outputs, &outcome)?;
            println!("sweep summary written to {}", cfg.outputs.join("sweep.csv").display());
            let failed = outcome.n_failed();
            Ok(if failed == 0 {
                0
            } else if failed == outcome.entries.len() {
                3
            } else {
                4
            })
        }
        Command::Oracle { which, sites } => {
            print_oracle(&cfg, which, *sites)?;
            Ok(0)
        }
        Command::Theory => {
            print_theory(&cfg)?;
            Ok(0)
        }
        Command::Fit { csv, window } => fit_csv(csv, window.as_deref()),
    }
}

fn print_oracle(cfg: &RunConfig, which: &str, sites: usize) -> Result<(), CoreError> {
    let grid = TimeGrid::new(cfg.t_a, cfg.dt, cfg.tau_c)?;
    let sched = AnnealingSchedule::new(cfg.alpha)?;
    match which {
        "trajectory" => {
            let samples = ed_trotter_evolve(sites, &sched, &grid)?;
            println!("s,energy,sx,zz");
            for p in samples {
                println!("{},{},{},{}", p.s, p.energy, p.sx, p.zz);
            }
        }
        "equilibrium" => {
            println!("s,energy");
            for j in 0..=cfg.measure_points {
                let s = j as f64 / cfg.measure_points as f64;
                let (a, b) = sched.eval(s)?;
                println!("{s},{}", tfic_equilibrium_energy(a, b, cfg.t_b)?);
            }
        }
        "classical" => {
            println!("T_B,energy");
            println!("{},{}", cfg.t_b, anneal_core::classical_chain_energy(1.0, cfg.t_b)?);
        }
        "dephasing" => {
            let bath = BathSpec::new(cfg.eta, cfg.omega_c, cfg.t_b)?;
            println!("t,coherence");
            for l in 0..=grid.m {
                let t = l as f64 * cfg.dt;
                println!("{t},{}", dephasing_coherence(t, &bath)?);
            }
        }
        other => {
            return Err(CoreError::Config(format!(
                "oracle must be trajectory|equilibrium|classical|dephasing, got {other:?}"
            )))
        }
    }
    Ok(())
}

fn print_theory(cfg: &RunConfig) -> Result<(), CoreError> {
    let b = predicted_exponent(cfg.alpha)?;
    println!("b_pred = {b}");
    if cfg.eta > 0.0 {
        let model = FreezingModel::unit(cfg.alpha, cfg.eta, cfg.t_a)?;
        match freezing_point(&model) {
            Freezing::At { s_star } => {
                println!("s_star = {s_star}");
                println!("T_star = {}", anneal_core::effective_temperature(s_star, cfg.t_b)?);
            }
            Freezing::Never { arg } => {
                println!("s_star = never (relaxation never outpaced, arg = {arg})");
            }
        }
    } else {
        println!("s_star = undefined (eta = 0: closed system never thermalizes)");
    }
    Ok(())
}

fn fit_csv(path: &PathBuf, window: Option<&str>) -> Result<u8, CoreError> {
    let text = std::fs::read_to_string(path)?;
    let (points, footer) = emit::read_sweep_csv(&text)?;
    let window = match window {
        Some(spec) => {
            let (lo, hi) = spec.split_once("..").ok_or_else(|| {
                CoreError::Config(format!("--window must be lo..hi, got {spec:?}"))
            })?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| CoreError::Config(format!("bad window bound {s:?}")))
            };
            (parse(lo)?, parse(hi)?)
        }
        None => match &footer {
            Some(f) => f.window,
            None => {
                let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        },
    };
    let fit = fit_power_law(&points, window)?;
    println!(
        "# fit: a={} b={} stderr_b={} window={}..{} points={}",
        fit.a, fit.b, fit.stderr_b, fit.window.0, fit.window.1, fit.n_points
    );
    if let Some(f) = footer {
        let tol = 1e-9;
        let ok = (f.a - fit.a).abs() <= tol * f.a.abs().max(1.0)
            && (f.b - fit.b).abs() <= tol * f.b.abs().max(1.0)
            && (f.stderr_b - fit.stderr_b).abs() <= tol * f.stderr_b.abs().max(1.0);
        if ok {
            println!("# footer reproduced");
        } else {
            eprintln!(
                "footer mismatch: embedded b = {}, refit b = {} (tolerance {tol})",
                f.b, fit.b
            );
            return Ok(1);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    anneal_core::tune_blas_kernel();
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code_for(&e))
        }
    }
}
