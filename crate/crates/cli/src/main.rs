//! Command-line harness around the solver library: single runs, error-order
//! studies, Cesaro-average studies, consistency studies, and run-directory
//! diagnosis. All tables come out as CSV in the run directory.
//!
//! Exit codes: 0 on success, 2 on config errors, 3 on admissibility
//! failures, 1 otherwise.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcfv_core::config::{self, RunSpec};
use mcfv_core::error::Error;
use mcfv_core::studies;

#[derive(Parser)]
#[command(
    name = "mcfv",
    version,
    about = "Multicomponent compressible Euler finite-volume harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a single run and write its artifact directory.
    Run {
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mesh-refinement error study on the manufactured case.
    Eoc {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cesaro-average convergence study on the shear case.
    Cesaro {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Consistency-residual decay study.
    Consistency {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check the invariants recorded in a run directory.
    Diagnose { run_dir: PathBuf },
}

fn load_spec(path: &Path) -> Result<RunSpec, Error> {
    let spec = config::load(path)?;
    if let config::CaseSpec::Manufactured { .. } = &spec.case {
        // The error tables assume the reference mixture; anything else is
        // allowed but worth calling out.
        let reference = spec.mixture.n_species() == 2
            && spec
                .mixture
                .species()
                .iter()
                .all(|s| (s.gamma() - 1.4).abs() < 1e-12 && (s.r() - 0.4).abs() < 1e-12);
        if !reference {
            eprintln!(
                "warning: manufactured case with a non-reference mixture \
                 (reference: two species, gamma = 1.4, r = 0.4)"
            );
        }
    }
    Ok(spec)
}

fn out_dir(spec: &RunSpec, config_path: &Path, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| spec.output.clone())
        .unwrap_or_else(|| studies::default_output_dir(config_path, spec.hash))
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out } => {
            let spec = load_spec(&config)?;
            let dir = out_dir(&spec, &config, out);
            let run = studies::run_single(&spec, &dir)?;
            println!(
                "run complete: {} steps to t = {}, artifacts in {}",
                run.output.steps,
                spec.t_end,
                dir.display()
            );
            Ok(())
        }
        Command::Eoc { config, out } => {
            let spec = load_spec(&config)?;
            let dir = out_dir(&spec, &config, out);
            let report = studies::run_eoc(&spec, Some(&dir))?;
            println!("variable mean-EOC:");
            for (v, m) in report.variables.iter().zip(&report.mean_eoc) {
                println!("  {v}: {m:.3}");
            }
            println!("report written to {}", dir.join("report_eoc.csv").display());
            Ok(())
        }
        Command::Cesaro { config, out } => {
            let spec = load_spec(&config)?;
            let dir = out_dir(&spec, &config, out);
            let report = studies::run_cesaro(&spec, Some(&dir))?;
            for (v, rows) in report.variables.iter().zip(&report.rows) {
                let e2: Vec<String> = rows.iter().map(|r| format!("{:.3e}", r.e2)).collect();
                println!("{v}: E2 = [{}]", e2.join(", "));
            }
            println!(
                "report written to {}",
                dir.join("report_cesaro.csv").display()
            );
            Ok(())
        }
        Command::Consistency { config, out } => {
            let spec = load_spec(&config)?;
            let dir = out_dir(&spec, &config, out);
            let report = studies::run_consistency(&spec, Some(&dir))?;
            for row in &report.rows {
                let vals: Vec<String> = report
                    .components
                    .iter()
                    .zip(&row.residuals)
                    .map(|(c, r)| format!("{}={r:.3e}", c.label()))
                    .collect();
                println!("N = {:>4}: {}", row.cells, vals.join(" "));
            }
            println!(
                "report written to {}",
                dir.join("consistency.csv").display()
            );
            Ok(())
        }
        Command::Diagnose { run_dir } => {
            let report = studies::diagnose(&run_dir)?;
            report.print();
            if report.all_passed() {
                Ok(())
            } else {
                Err(Error::Invalid(
                    "one or more diagnostics checks failed".into(),
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => ExitCode::from(2),
                ref err if err.is_admissibility() => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
