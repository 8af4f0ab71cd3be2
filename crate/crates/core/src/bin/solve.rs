//! Command-line front end: `solve run`, `solve mms`, `solve sweep`.
//!
//! Exit codes: 0 success, 2 non-convergence, 1 any other error.

use clap::{Parser, Subcommand};
use darcy_benard::cli::{parse_config, run_mms, run_scenario, run_sweep, Sweep};
use darcy_benard::error::Error;

#[derive(Parser)]
#[command(name = "solve", about = "Hydro-thermal porous-medium convection solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a config file.
    Run {
        /// path to a `key = value` configuration file
        config: String,
    },
    /// Manufactured-solution refinement study.
    Mms {
        #[arg(long, default_value_t = 6)]
        levels: usize,
        #[arg(long = "base-n", default_value_t = 4)]
        base_n: usize,
        #[arg(long = "output-dir", default_value = "out")]
        output_dir: String,
    },
    /// Run the config once per value of Ra or mesh resolution.
    Sweep {
        config: String,
        /// comma-separated Rayleigh numbers, e.g. 50,100,500,1000
        #[arg(long, value_delimiter = ',')]
        ra: Vec<f64>,
        /// comma-separated cells-per-side values, e.g. 16,32,64,128,256
        #[arg(long = "h", value_delimiter = ',')]
        h: Vec<usize>,
    },
}

fn load_config(path: &str) -> Result<darcy_benard::cli::SimulationConfig, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(converged) => {
            if converged {
                0
            } else {
                2
            }
        }
        Err(Error::NonConvergence { .. }) => {
            eprintln!("error: solver did not converge");
            2
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let result = run_scenario(&config)?;
            match result.nu_average {
                Some(nu) => println!(
                    "{} Ra={} n={}: Nu = {nu:.8}, steps = {}, residual = {:.3e}, converged = {}",
                    result.scenario, result.ra, result.n, result.steps, result.final_residual,
                    result.converged
                ),
                None => println!(
                    "{} n={}: theta L2 error = {:.6e}",
                    result.scenario, result.n, result.final_residual
                ),
            }
            for path in &result.manifest {
                println!("wrote {}", path.display());
            }
            Ok(result.converged)
        }
        Command::Mms {
            levels,
            base_n,
            output_dir,
        } => {
            let result = run_mms(levels, base_n, &output_dir)?;
            for path in &result.manifest {
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::Sweep { config, ra, h } => {
            let config = load_config(&config)?;
            let sweep = match (ra.is_empty(), h.is_empty()) {
                (false, true) => Sweep::Ra(ra),
                (true, false) => Sweep::MeshN(h),
                _ => {
                    return Err(Error::InvalidArgument(
                        "pass exactly one of --ra or --h".into(),
                    ))
                }
            };
            let result = run_sweep(&config, &sweep)?;
            for row in &result.rows {
                let nu = row
                    .nu
                    .map(|v| format!("{v:.8}"))
                    .unwrap_or_else(|| "-".into());
                println!(
                    "value = {}: Nu = {nu}, steps = {}, status = {}",
                    row.value, row.steps, row.status
                );
            }
            Ok(result.all_converged)
        }
    }
}
