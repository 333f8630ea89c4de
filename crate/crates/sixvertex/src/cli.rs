//! Command-line driver.
//!
//! Every subcommand reads its block of the JSON config (or the defaults), applies flag
//! overrides, writes its CSV/JSON outputs under `--out` and prints a summary. Input paths
//! are relative to the working directory, output paths to `--out`.
//!
//! Exit status: 0 on success, 2 for invalid input (bad flags, config, domain or range
//! errors, missing files), 3 when a solver fails.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::commands::{self, OutDir};
use crate::config::{RunConfig, SourceConfig};
use crate::error::{AppResult, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "sixvertex", version, about = "Six-vertex model numerics: transfer matrices, Bethe roots, free energies and limit-shape flows")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true, default_value = "sixvertex-out")]
    pub out: PathBuf,
    /// Worker threads for sweeps (overrides the config and SIXVERTEX_WORKERS).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Special functions, weights, Δ and Yang–Baxter residual.
    CheckKernels {
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        u: Option<f64>,
        #[arg(long = "H")]
        h: Option<f64>,
    },
    /// Dominant transfer-matrix eigenvalue of each particle sector.
    XferEigen {
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        u: Option<f64>,
        #[arg(long = "H")]
        h: Option<f64>,
        #[arg(long)]
        n_sites: Option<usize>,
        #[arg(long = "sector")]
        sectors: Vec<usize>,
        #[arg(long)]
        v_amplitude: Option<f64>,
    },
    /// Bethe roots of one sector and the resulting eigenvalue.
    BetheSolve {
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        u: Option<f64>,
        #[arg(long = "H")]
        h: Option<f64>,
        #[arg(long)]
        n_sites: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        v_amplitude: Option<f64>,
    },
    /// Free energy and its first and second derivatives at one point.
    FreeEnergy {
        #[arg(long)]
        q: Option<f64>,
        #[arg(long = "H")]
        h: Option<f64>,
        #[arg(long)]
        u: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        m_nodes: Option<usize>,
    },
    /// Parallel sweep of the commutation identities.
    VerifyIdentities {
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, value_parser = ["closed-form", "finite-difference"])]
        source: Option<String>,
        #[arg(long)]
        m_nodes: Option<usize>,
    },
    /// Tabulates a free-energy surface and writes it as text.
    BuildSurface {
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        m_nodes: Option<usize>,
    },
    /// Hamiltonian evolution with conservation monitoring.
    Evolve {
        #[arg(long)]
        surface: Option<PathBuf>,
        #[arg(long)]
        dy: Option<f64>,
        #[arg(long)]
        y_end: Option<f64>,
        #[arg(long)]
        g: Option<usize>,
    },
    /// Action minimization between two slices of a flow.
    MinimizeAction {
        #[arg(long)]
        surface: Option<PathBuf>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        t_end: Option<f64>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn fmt_opt(v: &Value, key: &str) -> String {
    match &v[key] {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.6e}"),
            _ => n.to_string(),
        },
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn summary_line(v: &Value) -> String {
    match v["command"].as_str().unwrap_or("") {
        "verify-identities" => {
            let m = &v["max_residual"];
            format!(
                "verify-identities ({}): {}/{} points ok; max residual per identity: r1 = {:.3e}, r2 = {:.3e}, r3 = {:.3e}",
                v["source"].as_str().unwrap_or(""),
                v["succeeded"],
                v["points"],
                m[0].as_f64().unwrap_or(f64::NAN),
                m[1].as_f64().unwrap_or(f64::NAN),
                m[2].as_f64().unwrap_or(f64::NAN),
            )
        }
        "free-energy" => format!(
            "free-energy: q = {}, H = {}, u = {}: value = {}, branch {}, H1 = {}, H2 = {}, H11 = {}, H12 = {}, H22 = {}",
            v["q"], v["h"], v["u"], fmt_opt(v, "value"), v["branch"].as_str().unwrap_or(""),
            fmt_opt(v, "h1"), fmt_opt(v, "h2"), fmt_opt(v, "h11"), fmt_opt(v, "h12"), fmt_opt(v, "h22"),
        ),
        _ => format!("{}", v),
    }
}

fn dispatch(cli: Cli) -> AppResult<Value> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let workers = cli.workers.or(cfg.workers);
    let out = OutDir(cli.out);
    match cli.command {
        Command::CheckKernels { eta, u, h } => {
            let s = &mut cfg.check_kernels;
            set(&mut s.eta, eta);
            set(&mut s.u, u);
            set(&mut s.h, h);
            commands::check_kernels(s, &out)
        }
        Command::XferEigen { eta, u, h, n_sites, sectors, v_amplitude } => {
            let s = &mut cfg.xfer_eigen;
            set(&mut s.eta, eta);
            set(&mut s.u, u);
            set(&mut s.h, h);
            set(&mut s.n_sites, n_sites);
            set(&mut s.v_amplitude, v_amplitude);
            if !sectors.is_empty() {
                s.sectors = sectors;
            }
            commands::xfer_eigen(s, &out)
        }
        Command::BetheSolve { eta, u, h, n_sites, n, v_amplitude } => {
            let s = &mut cfg.bethe_solve;
            set(&mut s.eta, eta);
            set(&mut s.u, u);
            set(&mut s.h, h);
            set(&mut s.n_sites, n_sites);
            set(&mut s.n, n);
            set(&mut s.v_amplitude, v_amplitude);
            commands::bethe_solve(s, &out)
        }
        Command::FreeEnergy { q, h, u, eta, m_nodes } => {
            let s = &mut cfg.free_energy;
            set(&mut s.q, q);
            set(&mut s.h, h);
            set(&mut s.u, u);
            set(&mut s.eta, eta);
            set(&mut s.thermo.m_nodes, m_nodes);
            commands::free_energy(s, &out)
        }
        Command::VerifyIdentities { eta, source, m_nodes } => {
            let s = &mut cfg.verify_identities;
            set(&mut s.eta, eta);
            set(&mut s.thermo.m_nodes, m_nodes);
            match source.as_deref() {
                Some("finite-difference") => s.source = SourceConfig::FiniteDifference,
                Some(_) => s.source = SourceConfig::ClosedForm,
                None => {}
            }
            commands::verify_identities(s, workers, &out)
        }
        Command::BuildSurface { output, m_nodes } => {
            let s = &mut cfg.build_surface;
            set(&mut s.output, output);
            set(&mut s.thermo.m_nodes, m_nodes);
            commands::build_surface(s, workers, &out)
        }
        Command::Evolve { surface, dy, y_end, g } => {
            let s = &mut cfg.evolve;
            set(&mut s.surface, surface);
            set(&mut s.dy, dy);
            set(&mut s.y_end, y_end);
            set(&mut s.initial.g, g);
            commands::evolve_command(s, &out)
        }
        Command::MinimizeAction { surface, ny, t_end } => {
            let s = &mut cfg.minimize_action;
            set(&mut s.surface, surface);
            set(&mut s.ny, ny);
            set(&mut s.t_end, t_end);
            commands::minimize_action_command(s, &out)
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(summary) => {
            println!("{}", summary_line(&summary));
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
