use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rcm_core::{Error, RunConfig};

mod commands;

/// Random simplicial complexes on marked Poisson processes.
#[derive(Debug, Parser)]
#[command(name = "rcm", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Overrides {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed. Falls back to the config file, then RCM_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Family as the body of a TOML inline table, e.g.
    /// 'kind = "cech", radius = 0.3, alpha = 2, cutoff = 0.6'.
    #[arg(long, global = true)]
    family: Option<String>,

    /// Intensities, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    beta: Option<Vec<f64>>,

    /// Radii r, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    r: Option<Vec<f64>>,

    /// Sphere radii s, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    s: Option<Vec<f64>>,

    #[arg(long, global = true)]
    q: Option<usize>,

    /// Replicates per estimate.
    #[arg(long, global = true)]
    n: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one realization with the origin and export its complex.
    Build,
    /// Draw the realization and its exploration as SVG (d = 2).
    Render {
        /// Pixels per unit length.
        #[arg(long, default_value_t = 40.0)]
        scale: f64,
    },
    /// Estimate theta_r(beta) over the beta and r grids.
    Sweep,
    /// Estimate the critical intensity by curve crossing and bisection.
    Betac,
    /// Fit the decay of theta_r in r at each beta.
    Decay,
    /// Estimate both sides of the OSSS inequality.
    Osss,
    /// Run the exploration on one realization and export the trace.
    Explore,
}

fn load_config(o: &Overrides) -> Result<RunConfig, Error> {
    let mut config = match &o.config {
        Some(path) => RunConfig::load(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
            other => other,
        })?,
        None => {
            let mut c = RunConfig::example();
            if let Ok(seed) = std::env::var("RCM_SEED") {
                c.master_seed = seed
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("RCM_SEED must be an unsigned integer, got {seed:?}")))?;
            }
            c
        }
    };
    if let Some(seed) = o.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &o.out {
        config.out = out.clone();
    }
    if let Some(body) = &o.family {
        config.family = rcm_core::config::family_from_inline(body)?;
    }
    if let Some(b) = &o.beta {
        config.betas = b.clone();
    }
    if let Some(r) = &o.r {
        config.radii = r.clone();
    }
    if let Some(s) = &o.s {
        config.s = s.clone();
    }
    if let Some(q) = o.q {
        config.q = q;
    }
    if let Some(n) = o.n {
        config.n = n;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("rcm: {e}");
            return ExitCode::from(2);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("rcm: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| commands::run(&cli.command, &config)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rcm: {e:#}");
            let usage = matches!(e.downcast_ref::<Error>(), Some(Error::Config(_)));
            ExitCode::from(if usage { 2 } else { 3 })
        }
    }
}
