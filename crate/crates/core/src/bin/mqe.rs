//! `mqe`: build MQE networks, run sweeps and tabulate theory overlays.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numeric failure.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mqe_core::error::{MqeError, Result};
use mqe_core::harness::{self, SweepConfig, TheoryRequest};
use mqe_core::{build_mqe, UserSet, P_INV_E};

#[derive(Parser)]
#[command(name = "mqe", version, about = "Maximal quantum efficiency network construction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample uniform users in an L x L square and write a coordinates file.
    Generate {
        #[arg(long)]
        n: usize,
        /// Square side, in the same units as lambda0.
        #[arg(long = "L", alias = "side")]
        side: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda0: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build one network from a coordinates file.
    Optimize {
        #[arg(long)]
        users: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// Per-relay eavesdropping probability; defaults to 1 - 1/e.
        #[arg(long)]
        p: Option<f64>,
        /// Edge list CSV (`i,j,d,q`); stdout when no output is given.
        #[arg(long)]
        edges: Option<PathBuf>,
        /// Per-pair path CSV.
        #[arg(long)]
        paths: Option<PathBuf>,
        /// Full network document as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a parameter sweep described by a TOML file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate thresholds, boundaries and capacitance limits as CSV.
    Theory {
        #[arg(long, value_delimiter = ',', default_values_t = [P_INV_E])]
        p: Vec<f64>,
        /// L / lambda0 values for q_fc, q_mst and alpha_bar.
        #[arg(long = "L", value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0])]
        side: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [256, 512, 1024, 2048])]
        n: Vec<usize>,
        /// Log-spaced d / lambda0 grid as `lo,hi,points`.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 10.0, 41.0])]
        d_grid: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { n, side, lambda0, seed, out } => {
            let users = UserSet::sample(n, side, lambda0, seed)?;
            let mut w = writer(out.as_deref())?;
            users.write_to(&mut w)?;
            w.flush()?;
        }
        Command::Optimize { users, alpha, p, edges, paths, json } => {
            let set = UserSet::read_from(BufReader::new(File::open(&users)?))?;
            let net = build_mqe(&set, alpha, p.unwrap_or(P_INV_E))?;
            log::info!("{} nodes, {} edges, density {:.6}", net.len(), net.edges().len(), net.density());
            if edges.is_some() || (paths.is_none() && json.is_none()) {
                let mut w = writer(edges.as_deref())?;
                net.write_edge_list(&mut w)?;
                w.flush()?;
            }
            if let Some(path) = paths {
                let mut w = writer(Some(&path))?;
                net.write_paths(&mut w)?;
                w.flush()?;
            }
            if let Some(path) = json {
                let mut w = writer(Some(&path))?;
                serde_json::to_writer(&mut w, &net.to_document())?;
                w.flush()?;
            }
        }
        Command::Sweep { config, out } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = SweepConfig::from_toml(&text)?;
            let dir = out
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| MqeError::InvalidArgument("no output directory: pass --out or set 'output'".into()))?;
            let res = harness::run_sweep(&cfg, &dir, Some(&text))?;
            let failed: usize = res.cells.iter().map(|c| c.cell.realizations - c.completed).sum();
            log::info!("{} cells ({} resumed), {} failed realizations", res.cells.len(), res.resumed, failed);
            let mut w = writer(None)?;
            harness::write_cells_csv(&res.cells, &mut w)?;
            w.flush()?;
        }
        Command::Theory { p, side, n, d_grid, steps, out } => {
            let [lo, hi, points] = d_grid[..] else {
                return Err(MqeError::InvalidArgument("--d-grid expects lo,hi,points".into()));
            };
            if !(lo > 0.0 && hi >= lo && points >= 1.0 && points.fract() == 0.0) {
                return Err(MqeError::InvalidArgument(format!("bad --d-grid {lo},{hi},{points}")));
            }
            let rows = harness::theory_table(&TheoryRequest {
                p,
                l_over_lambda: side,
                n,
                d_over_lambda: harness::log_grid(lo, hi, points as usize),
                steps,
            })?;
            let mut w = writer(out.as_deref())?;
            harness::write_theory_csv(&rows, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
