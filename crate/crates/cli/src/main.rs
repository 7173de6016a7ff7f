//! Batch driver. Exit codes: 0 success, 1 usage or configuration error, 2 failed assertion.

mod config;
mod output;
mod suites;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use config::{ConfigError, Mode, RunConfig};
use wpfp_core::dispersive::{CheckKind, EstimateCheck};
use wpfp_core::evolve::{run, weighted_monitors, EvolveError, DIAGNOSTIC_COLUMNS, L2_BOUND_SLACK};
use wpfp_core::State;

#[derive(Parser, Debug)]
#[command(name = "wpfp", version, about = "Wigner-Poisson-Fokker-Planck phase-space runs and estimate checks")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override one key, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized cases (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// No summary on stdout.
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    Usage(String),
    Assertion(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Usage(format!("cannot write {}: {e}", path.display()))
}

fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::load(&cli.config)?;
    for pair in &cli.set {
        cfg.set_pair(pair).map_err(|e| ConfigError(format!("--set {pair}: {e}")))?;
    }
    if let Some(seed) = cli.seed {
        cfg.set("seed", &seed.to_string())?;
    }
    if let Some(out) = &cli.out {
        cfg.set("out", &out.to_string_lossy())?;
    }
    Ok(cfg)
}

struct Report {
    checks: Vec<EstimateCheck>,
    lines: Vec<String>,
}

fn run_mode(cfg: &RunConfig, dir: &Path, header: &str, nonlinear: bool) -> Result<Report, Failure> {
    let p = cfg.params()?;
    let grid = cfg.grid()?;
    let ecfg = cfg.evolve(nonlinear)?;
    let every: usize = cfg.get("snapshot_every")?;
    let w0 = cfg.initial_state(&grid)?;

    let mut k = 0usize;
    let mut written = Vec::new();
    let mut write_error = None;
    let snapshot = |w: &State, k: usize| {
        let path = dir.join(format!("snapshot_{k:04}.bin"));
        w.write_snapshot(&path).map_err(|e| format!("cannot write {}: {e}", path.display()))
    };
    let result = run(&w0, &p, &ecfg, |w, _| {
        if (k == 0 || (every > 0 && k % every == 0)) && write_error.is_none() {
            match snapshot(w, k) {
                Ok(()) => written.push(k),
                Err(e) => write_error = Some(e),
            }
        }
        k += 1;
    });
    if let Some(e) = write_error {
        return Err(Failure::Usage(e));
    }
    let out = match result {
        Ok(o) => o,
        Err(EvolveError::NonContraction { t, dt, iterations }) => {
            let row = EstimateCheck {
                name: "picard_contraction".into(),
                value: iterations as f64,
                target: ecfg.picard_max as f64,
                tol: 0.0,
                r2: None,
                kind: CheckKind::AtMost,
                passed: false,
            };
            output::write_checks(dir, header, std::slice::from_ref(&row)).map_err(io_err(dir))?;
            return Err(Failure::Assertion(format!("Picard iteration did not contract at t = {t} (dt = {dt})")));
        }
        Err(e) => return Err(Failure::Assertion(e.to_string())),
    };
    let last = out.diagnostics.len() - 1;
    if written.last() != Some(&last) {
        snapshot(&out.state, last).map_err(Failure::Usage)?;
        written.push(last);
    }
    let path = dir.join("diagnostics.csv");
    output::write_csv(&path, header, DIAGNOSTIC_COLUMNS, out.diagnostics.iter().map(|r| r.csv())).map_err(io_err(&path))?;

    let first = &out.diagnostics[0];
    let d = p.dim.get() as f64;
    let l2_excess = out.diagnostics.iter().map(|r| r.l2 / ((0.5 * d * p.beta * r.t).exp() * first.l2) - 1.0).fold(f64::NEG_INFINITY, f64::max);
    let mut checks = vec![EstimateCheck::bound("l2_growth_law", l2_excess, L2_BOUND_SLACK, 0.0)];
    if nonlinear {
        let rep = weighted_monitors(&out.diagnostics, &p);
        checks.push(EstimateCheck::bound("weighted_norms_nonfinite", if rep.finite { 0.0 } else { 1.0 }, 0.0, 0.0));
    } else {
        let x_ratio = out.diagnostics.iter().map(|r| r.x_norm / (4.0 * (p.kappa() * (r.t - first.t)).exp() * first.x_norm)).fold(0.0, f64::max);
        checks.push(EstimateCheck::bound("semigroup_x_ratio", x_ratio, 1.0, 0.0));
    }
    let mut lines = vec![format!(
        "{} run reached t = {}, {} step halvings, {} snapshots",
        if nonlinear { "nonlinear" } else { "linear" },
        out.state.time,
        out.halvings,
        written.len()
    )];
    lines.extend(out.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(Report { checks, lines })
}

fn aborted(suite: &'static str) -> impl Fn(String) -> Failure {
    move |e| Failure::Assertion(format!("{suite} suite aborted: {e}"))
}

fn verify(cfg: &RunConfig, mode: Mode) -> Result<Report, Failure> {
    let seed = cfg.seed()?;
    let cases: usize = cfg.get("cases")?;
    let mut checks = Vec::new();
    let wanted = |m: Mode| mode == m || mode == Mode::VerifyAll;
    if wanted(Mode::VerifyKernel) {
        checks.extend(suites::kernel_suite(seed, cases).map_err(aborted("kernel"))?);
    }
    if wanted(Mode::VerifyTheta) {
        checks.extend(suites::theta_suite(seed, cases).map_err(aborted("theta"))?);
    }
    if wanted(Mode::VerifyDispersive) {
        checks.extend(suites::dispersive(&cfg.omegas()?).map_err(aborted("dispersive"))?);
    }
    Ok(Report { checks, lines: Vec::new() })
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve(cli)?;
    let mode = cfg.validate()?;
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let sidecar = dir.join("run_config.cfg");
    std::fs::write(&sidecar, cfg.to_text()).map_err(io_err(&sidecar))?;
    let header = cfg.header();

    let report = match mode {
        Mode::Linear => run_mode(&cfg, &dir, &header, false)?,
        Mode::Nonlinear => run_mode(&cfg, &dir, &header, true)?,
        _ => verify(&cfg, mode)?,
    };
    output::write_checks(&dir, &header, &report.checks).map_err(io_err(&dir))?;
    if !cli.quiet {
        for l in &report.lines {
            println!("{l}");
        }
        print!("{}", output::summary_table(&report.checks));
    }
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Assertion(m)) => {
            eprintln!("assertion failure: {m}");
            ExitCode::from(2)
        }
    }
}
