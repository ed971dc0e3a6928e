use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rpm3_cli::report::{self, output_paths, CsvRow};
use rpm3_cli::{audit, scenario, sweep, CliError, Result};

/// Simulate rateless private distributed matrix multiplication.
#[derive(Parser)]
#[command(name = "rpm3", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its metrics.
    Run {
        config: PathBuf,
        /// Seed; overrides the one in the scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Run this many consecutive seeds.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write a JSON-lines event trace.
        #[arg(long)]
        trace: bool,
    },
    /// Run a parameter grid and write one CSV row per point and seed.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check that colluding workers learn nothing.
    Audit {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Zero one random matrix; the audit must then report a leak.
        #[arg(long)]
        leak: bool,
    },
}

fn seed_list(first: u64, count: u64) -> Result<Vec<u64>> {
    if count == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    Ok((0..count).map(|i| first.wrapping_add(i)).collect())
}

fn cmd_run(config: &Path, seed: Option<u64>, seeds: Option<u64>, out: &Path, trace: bool) -> Result<()> {
    let sc = scenario::load(config)?;
    let seeds = seed_list(seed.unwrap_or(sc.seed), seeds.unwrap_or(1))?;
    fs::create_dir_all(out)?;
    let mut rows = Vec::new();
    for &s in &seeds {
        let res = report::execute(&sc, s, trace)?;
        let stem = if seeds.len() == 1 {
            sc.name.clone()
        } else {
            format!("{}_seed{s}", sc.name)
        };
        let (json, _, trace_path) = output_paths(out, &stem);
        report::write_json(&json, &res.file)?;
        if trace {
            report::write_trace(&trace_path, &res.trace)?;
        }
        print!("{}", report::summary(&res.file));
        rows.push(CsvRow::from(&res.file));
    }
    let (_, csv, _) = output_paths(out, &sc.name);
    report::write_csv(&csv, &rows)
}

fn cmd_sweep(config: &Path, seed: Option<u64>, seeds: u64, out: &Path) -> Result<()> {
    let (cfg, base, dir) = sweep::load(config)?;
    let points = sweep::expand(&cfg, &base, dir.as_deref())?;
    let first = seed.or_else(|| base.get("seed").and_then(|v| v.as_u64())).unwrap_or(0);
    let seeds = seed_list(first, seeds)?;
    let res = sweep::run(&points, &seeds, cfg.max_runs.unwrap_or(sweep::DEFAULT_MAX_RUNS))?;
    for (label, why) in &res.skipped {
        eprintln!("warning: skipping {label}: {why}");
    }
    fs::create_dir_all(out)?;
    report::write_csv(&out.join(format!("{}_sweep.csv", cfg.name)), &res.rows)?;
    println!(
        "{:<40} {:>6} {:>3} {:>6} {:>10} {:>10} {:>10}",
        "point", "seed", "c", "N", "rho", "rho_pred", "rho_I"
    );
    for r in &res.rows {
        let pred = r.rho_predicted.map_or_else(|| "-".to_string(), |p| format!("{p:.6}"));
        println!(
            "{:<40} {:>6} {:>3} {:>6} {:>10.6} {:>10} {:>10.6}",
            r.scenario, r.seed, r.c, r.responses, r.rho, pred, r.rho_improved
        );
    }
    Ok(())
}

fn cmd_audit(config: &Path, out: &Path, leak: bool) -> Result<()> {
    let cfg = audit::load(config)?;
    let res = audit::run_audit(&cfg, leak)?;
    fs::create_dir_all(out)?;
    report::write_json(&out.join(format!("{}_audit.json", cfg.name)), &res)?;
    print!("{}", audit::summary(&res));
    if !res.passed() {
        return Err(CliError::Privacy(format!(
            "colluding view depends on the input (total variation {}/{}), {} recovery failures",
            res.uniformity.tv_num, res.uniformity.tv_den, res.recovery.failures
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            seed,
            seeds,
            out,
            trace,
        } => cmd_run(config, *seed, *seeds, out, *trace),
        Command::Sweep {
            config,
            seed,
            seeds,
            out,
        } => cmd_sweep(config, *seed, *seeds, out),
        Command::Audit { config, out, leak } => cmd_audit(config, out, *leak),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
