use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use weakshift::report::{fmt_float, read_results, slope_summary, write_results};
use weakshift::scenario_file::{load_scenario, parse_observable, parse_state};
use weakshift::verify::run_verify;
use weakshift::{Error, Result};
use weakshift_core::harness::{estimate_from_statistics, run_scenario, sweep_g, Backend};
use weakshift_core::system::weak_value;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INVALID_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "weakshift",
    version,
    about = "Weak values and pointer shifts of post-selected measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the weak value <f|A|i>/<f|i> as a, b.
    WeakValue {
        /// Observable name (pauli-x, pauli-y, pauli-z, identity) or a matrix file.
        #[arg(long)]
        observable: String,
        /// Pre-selected state, e.g. "1, 1".
        #[arg(long, allow_hyphen_values = true)]
        psi_i: String,
        /// Post-selected state, e.g. "1, i".
        #[arg(long, allow_hyphen_values = true)]
        psi_f: String,
    },
    /// Run one scenario file and write its result row.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the backend named in the file.
        #[arg(long)]
        backend: Option<Backend>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario over a ladder of couplings and fit residual slopes.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated, strictly increasing couplings.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        g_ladder: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized self-check battery.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invert result rows back into weak-value estimates.
    Estimate {
        #[arg(long)]
        from: PathBuf,
        /// Pointer mass used when the rows were produced.
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID_INPUT)
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|source| Error::File {
            path: p.to_path_buf(),
            source,
        })?),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::WeakValue {
            observable,
            psi_i,
            psi_f,
        } => {
            let psi_i = parse_state(&psi_i)?;
            let psi_f = parse_state(&psi_f)?;
            let spec = match fs::read_to_string(&observable) {
                Ok(text) => text,
                Err(_) => observable,
            };
            let w = weak_value(&parse_observable(&spec, psi_i.dim())?, &psi_i, &psi_f)?;
            println!("a,b\n{},{}", fmt_float(w.a), fmt_float(w.b));
        }
        Command::Simulate { scenario, backend, out } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(b) = backend {
                s.backend = b;
            }
            let result = run_scenario(&s)?;
            if result.low_success {
                eprintln!("warning: post-selection success probability {:e}", result.succ_sim);
            }
            write_results(output(out.as_deref())?, &[result])?;
        }
        Command::Sweep {
            scenario,
            g_ladder,
            out,
        } => {
            let report = sweep_g(&load_scenario(&scenario)?, &g_ladder)?;
            write_results(output(out.as_deref())?, &report.results)?;
            eprint!("{}", slope_summary(&report));
        }
        Command::Verify { seed, cases, out } => {
            let report = run_verify(seed, cases);
            write_results(output(out.as_deref())?, &report.results)?;
            for (index, message) in &report.failures {
                eprintln!("FAIL case {index}: {message}");
            }
            eprintln!(
                "verify seed {seed}: {} cases, {} failed checks",
                cases,
                report.failures.len()
            );
            if !report.passed() {
                return Ok(ExitCode::from(EXIT_VERIFY_FAILED));
            }
        }
        Command::Estimate { from, mass, out } => {
            let file = File::open(&from).map_err(|source| Error::File { path: from, source })?;
            let rows = read_results(file)?;
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            w.write_record(["scenario_id", "backend", "g", "a_est", "b_est", "a", "b"])?;
            for row in &rows {
                let est = estimate_from_statistics(
                    row.delta_q(),
                    row.delta_p(),
                    row.g(),
                    row.var_p(),
                    row.d_var_q_dt(),
                    mass,
                )?;
                let (a, b) = row.weak_value();
                let mut record = vec![row.scenario_id.to_string(), row.backend.clone()];
                record.extend([row.g(), est.a, est.b, a, b].map(fmt_float));
                w.write_record(record)?;
            }
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
