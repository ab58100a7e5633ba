//! Command-line driver: single solves, boundary sweeps, ensemble generation
//! and oracle cross-checks.

mod config;
mod verify;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use secrecy_swipt::channel::{generate_ensemble, load_ensemble, write_ensemble};
use secrecy_swipt::region::{solve_scheme, trace_boundary, tradeoff_point, write_boundary_csv};
use secrecy_swipt::{fmt_sci, Constraints, DualSolveReport, FadingEnsemble};

use config::{EnsembleSource, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "secrecy-swipt", version, about = "Secrecy-aware SWIPT power allocation")]
struct Cli {
    /// TOML configuration file; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Ensemble seed, overriding the file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// optimal | alt | fixed:<alpha> | noan | nocancel
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// outage | esc
    #[arg(long, global = true)]
    kind: Option<String>,
    /// Harvest floor in watts, or with a unit such as `7 uW`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    qbar: Option<String>,
    /// Target secrecy rate in bits/s/Hz.
    #[arg(long, global = true)]
    r0: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one scheme at one harvest floor.
    Solve,
    /// Trace a trade-off boundary over a harvest-floor grid.
    Region,
    /// Generate the fading ensemble and save it.
    Ensemble,
    /// Cross-check solvers against brute-force oracles.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::Perstate)]
        suite: Suite,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Suite {
    Perstate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    let overrides = Overrides {
        seed: cli.seed,
        scheme: cli.scheme.clone(),
        kind: cli.kind.clone(),
        q_bar: cli.qbar.clone(),
        r0: cli.r0,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Solve => solve(&cfg, &cli.out),
        Command::Region => region(&cfg, &cli.out),
        Command::Ensemble => ensemble(&cfg, &cli.out),
        Command::Verify { suite, trials } => verify(&cfg, suite, trials),
    }
}

fn build_ensemble(cfg: &RunConfig) -> Result<FadingEnsemble> {
    Ok(match &cfg.ensemble {
        EnsembleSource::Generate { states, seed } => generate_ensemble(&cfg.geometry, *states, *seed)?,
        EnsembleSource::Load(path) => load_ensemble(path)?,
    })
}

fn create(out: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let path = out.join(name);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok((path, BufWriter::new(file)))
}

fn solve(cfg: &RunConfig, out: &Path) -> Result<ExitCode> {
    let ens = build_ensemble(cfg)?;
    let c = Constraints::new(cfg.q_bar)?;
    let rep = solve_scheme(cfg.scheme, cfg.kind, &ens, &cfg.params, &c, &cfg.solver, &cfg.alt)?;

    let (summary_path, mut w) = create(out, "solve_summary.csv")?;
    w.write_all(cfg.header().as_bytes())?;
    write_summary(&mut w, cfg, &rep)?;
    w.flush()?;

    let (decisions_path, mut w) = create(out, "solve_decisions.csv")?;
    w.write_all(cfg.header().as_bytes())?;
    writeln!(w, "state,h,g,p_w,alpha")?;
    for (i, (s, d)) in ens.states().iter().zip(&rep.decisions).enumerate() {
        writeln!(w, "{i},{},{},{},{}", fmt_sci(s.h), fmt_sci(s.g), fmt_sci(d.p), fmt_sci(d.alpha))?;
    }
    w.flush()?;

    let point = tradeoff_point(&rep);
    let label = match cfg.kind {
        secrecy_swipt::ProblemKind::OutageMin => "outage probability",
        secrecy_swipt::ProblemKind::EscMax => "ergodic secrecy rate (bits/s/Hz)",
    };
    println!("scheme {} / {}", cfg.scheme, cfg.kind.label());
    println!("  {label}: {:.6}", rep.objective);
    println!("  average harvest: {:.4e} W (floor {:.4e} W)", point.harvested, cfg.q_bar);
    println!("  average power: {:.4e} W (limit {:.4e} W)", rep.avg_power, cfg.params.p_avg);
    println!("  multipliers: lambda {:.6e}, mu {:.6e}", rep.dual.lambda, rep.dual.mu);
    println!("  dual value {:.6}, gap estimate {:.3e}, iterations {}", rep.dual_value, rep.dual_gap_estimate, rep.iterations);
    println!("wrote {} and {}", summary_path.display(), decisions_path.display());
    Ok(ExitCode::SUCCESS)
}

fn write_summary<W: Write>(w: &mut W, cfg: &RunConfig, rep: &DualSolveReport) -> std::io::Result<()> {
    let point = tradeoff_point(rep);
    writeln!(
        w,
        "scheme,kind,q_bar,objective,region_objective,harvested_w,avg_power_w,lambda,mu,dual_value,dual_gap,iterations,repaired"
    )?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        cfg.scheme,
        cfg.kind.label(),
        fmt_sci(cfg.q_bar),
        fmt_sci(rep.objective),
        fmt_sci(point.objective),
        fmt_sci(point.harvested),
        fmt_sci(rep.avg_power),
        fmt_sci(rep.dual.lambda),
        fmt_sci(rep.dual.mu),
        fmt_sci(rep.dual_value),
        fmt_sci(rep.dual_gap_estimate),
        rep.iterations,
        rep.repaired
    )
}

fn region(cfg: &RunConfig, out: &Path) -> Result<ExitCode> {
    let ens = build_ensemble(cfg)?;
    let points = trace_boundary(&cfg.sweep, &ens, &cfg.params, &cfg.solver, &cfg.alt)?;
    let (path, mut w) = create(out, "boundary.csv")?;
    w.write_all(cfg.header().as_bytes())?;
    write_boundary_csv(&mut w, cfg.scheme, cfg.kind, &points)?;
    w.flush()?;
    for b in &points {
        println!(
            "q_bar {:.4e} W  objective {:.6}  harvest {:.4e} W",
            b.q_bar, b.point.objective, b.point.harvested
        );
    }
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn ensemble(cfg: &RunConfig, out: &Path) -> Result<ExitCode> {
    let ens = build_ensemble(cfg)?;
    let (path, mut w) = create(out, "ensemble.csv")?;
    w.write_all(cfg.header().as_bytes())?;
    write_ensemble(&ens, &mut w)?;
    println!("wrote {} states to {}", ens.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn verify(cfg: &RunConfig, suite: Suite, trials: usize) -> Result<ExitCode> {
    let seed = match cfg.ensemble {
        EnsembleSource::Generate { seed, .. } => seed,
        EnsembleSource::Load(_) => 1,
    };
    let results = match suite {
        Suite::Perstate => verify::perstate_suite(&cfg.params, trials, seed, Default::default()),
    };
    let mut failures = 0;
    for r in &results {
        let verdict = if r.failures == 0 { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {}: {} failures in {} trials, worst excess {:.3e}",
            r.name, r.failures, r.trials, r.worst
        );
        failures += r.failures;
    }
    println!("{failures} failures");
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
