//! `aggsteady`: command line front end for the radial aggregation-diffusion
//! toolkit. Every subcommand writes CSV/JSON artifacts plus a summary.json
//! into `--out` (default ./out/<scenario-name>); `report` indexes a batch.

mod commands;
mod util;

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "aggsteady", version, about = "radial aggregation-diffusion toolkit")]
struct Cli {
    /// worker threads (0 = all cores); fixed thread count aids reproducibility
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// output directory; defaults to ./out/<scenario-name>
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Height transform of a density: height CSV plus round-trip check
    Height {
        /// density CSV with r,rho columns
        #[arg(long)]
        rho: Option<PathBuf>,
        /// builtin input: tent, cap, uniform, singularity-exponent
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 4096)]
        mass_nodes: usize,
    },
    /// Evaluate the height-linear curve between two densities at given times
    Interpolate {
        #[arg(long)]
        rho0: PathBuf,
        #[arg(long)]
        rho1: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// comma-separated list of t values in [0,1]
        #[arg(long, default_value = "0,0.25,0.5,0.75,1")]
        times: String,
        #[arg(long, default_value_t = 1024)]
        mass_nodes: usize,
    },
    /// Entropy + interaction energy report for one density
    Energy {
        #[arg(long)]
        rho: Option<PathBuf>,
        /// builtin scenario: tent, cap, uniform, endpoint-flatness
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long, default_value = "quadratic")]
        potential: String,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
    /// Convexity certificate along the interpolation curve
    Certify {
        #[arg(long)]
        rho0: Option<PathBuf>,
        #[arg(long)]
        rho1: Option<PathBuf>,
        /// builtin scenario: tent-pair, entropy-trichotomy, interaction-convexity
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long, default_value = "quadratic")]
        potential: String,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 41)]
        tgrid: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Solve the fixed-point steady-state problem
    Steady {
        #[arg(long, default_value = "quadratic")]
        potential: String,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long)]
        init: Option<PathBuf>,
        /// builtin scenario: quadratic-m2-n1
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long, default_value_t = 4.0)]
        rmax: f64,
        #[arg(long, default_value_t = 2048)]
        cells: usize,
    },
    /// Solve from many initializations and cluster the limits
    Scan {
        #[arg(long, default_value = "riesz:k=2")]
        potential: String,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 4.0)]
        rmax: f64,
        #[arg(long, default_value_t = 1024)]
        cells: usize,
        /// builtin scenario: uniqueness-scan
        #[arg(long)]
        builtin: Option<String>,
    },
    /// Run the finite-volume evolution and emit diagnostics + snapshots
    Evolve {
        /// potential spec, or "none" for pure diffusion
        #[arg(long)]
        potential: Option<String>,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long)]
        init: Option<PathBuf>,
        /// builtin scenario: tent, cap, uniform, barenblatt-decay
        #[arg(long)]
        builtin: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        tmax: f64,
        #[arg(long, default_value_t = 0.2)]
        cfl: f64,
    },
    /// Forge a tail-modified potential with an extra flat steady state
    Forge {
        #[arg(long, default_value = "quadratic")]
        base: String,
        #[arg(long, default_value_t = 1.5)]
        m: f64,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        levels: usize,
        #[arg(long, default_value_t = 30.0)]
        horizon: f64,
        #[arg(long, default_value_t = 1024)]
        cells: usize,
    },
    /// Randomized checks of the closed-form geometric identities
    Geometry {
        #[arg(long, default_value_t = 10000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Index summary.json files from a batch of scenario directories
    Report {
        #[arg(long, default_value = "out")]
        dir: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .expect("rayon pool already initialized");
    }
    match run(&cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.cmd {
        Cmd::Height { rho, builtin, n, mass_nodes } => {
            commands::height(rho.clone(), builtin.clone(), *n, *mass_nodes, &cli.out)
        }
        Cmd::Interpolate { rho0, rho1, n, times, mass_nodes } => {
            let ts = util::parse_times(times)?;
            commands::interpolate(rho0, rho1, *n, &ts, *mass_nodes, &cli.out)
        }
        Cmd::Energy { rho, builtin, potential, m, n } => {
            commands::energy(rho.clone(), builtin.clone(), potential, *m, *n, &cli.out)
        }
        Cmd::Certify { rho0, rho1, builtin, potential, m, n, tgrid, seed } => commands::certify(
            rho0.clone(),
            rho1.clone(),
            builtin.clone(),
            potential,
            *m,
            *n,
            *tgrid,
            *seed,
            &cli.out,
        ),
        Cmd::Steady { potential, m, n, init, builtin, rmax, cells } => commands::steady(
            potential,
            *m,
            *n,
            init.clone(),
            builtin.clone(),
            *rmax,
            *cells,
            &cli.out,
        ),
        Cmd::Scan { potential, m, n, count, seed, rmax, cells, builtin } => commands::scan(
            potential,
            *m,
            *n,
            *count,
            *seed,
            *rmax,
            *cells,
            builtin.clone(),
            &cli.out,
        ),
        Cmd::Evolve { potential, m, n, init, builtin, tmax, cfl } => commands::evolve(
            potential.clone(),
            *m,
            *n,
            init.clone(),
            builtin.clone(),
            *tmax,
            *cfl,
            &cli.out,
        ),
        Cmd::Forge { base, m, n, levels, horizon, cells } => {
            commands::forge(base, *m, *n, *levels, *horizon, *cells, &cli.out)
        }
        Cmd::Geometry { samples, seed } => commands::geometry(*samples, *seed, &cli.out),
        Cmd::Report { dir } => commands::report(dir, &cli.out),
    }
}
