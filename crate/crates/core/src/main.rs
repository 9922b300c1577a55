use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpmix::experiment::{cmd_export_synthetic, cmd_real, cmd_synthetic, Config, RunOutput};
use dpmix::Error;

#[derive(Parser)]
#[command(name = "dpmix", version, about = "Private multi-party data release for linear regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic convergence sweep over (method, n, epsilon, seed).
    Synthetic(Common),
    /// Train and score every method on a user-supplied CSV dataset.
    Real {
        #[command(flatten)]
        common: Common,
        /// Dataset path (overrides csv_path).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Label column name (overrides label_column).
        #[arg(long)]
        label: Option<String>,
        /// Number of parties (overrides m).
        #[arg(long)]
        m: Option<usize>,
    },
    /// Export one synthetic dataset and its ground-truth weights.
    Export {
        #[command(flatten)]
        common: Common,
        /// Rows to generate.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Feature count (overrides d).
        #[arg(long)]
        d: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines; flags win over the file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    root_seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Abort with exit code 3 on the first singular system.
    #[arg(long)]
    strict: bool,
    /// Full-scale grid (n up to 3e6, 1000 seeds). Slow.
    #[arg(long)]
    full: bool,
}

impl Common {
    fn resolve(&self, base: Config) -> Result<Config, Error> {
        let mut cfg = match &self.config {
            Some(p) => Config::from_file(base, p)?,
            None => base,
        };
        if self.full {
            eprintln!("warning: --full runs n up to 3e6 with 1000 seeds; expect hours of compute");
            cfg = cfg.full_scale();
        }
        if let Some(s) = self.seeds {
            cfg.seeds = s;
        }
        if let Some(r) = self.root_seed {
            cfg.root_seed = r;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.strict |= self.strict;
        Ok(cfg)
    }
}

fn report(out: &RunOutput, cfg: &Config) {
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let failed = out.trials.iter().filter(|t| t.error.is_some()).count();
    eprintln!(
        "{} trials ({} singular) in {} groups written to {}",
        out.trials.len(),
        failed,
        out.aggregates.len(),
        cfg.out_dir.display()
    );
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Synthetic(common) => {
            let cfg = common.resolve(Config::default())?;
            let out = cmd_synthetic(&cfg)?;
            report(&out, &cfg);
        }
        Command::Real { common, csv, label, m } => {
            let mut cfg = common.resolve(Config::real_defaults())?;
            if csv.is_some() {
                cfg.csv_path = csv;
            }
            if label.is_some() {
                cfg.label_column = label;
            }
            if let Some(m) = m {
                cfg.m = m;
            }
            let out = cmd_real(&cfg)?;
            report(&out, &cfg);
            for b in &out.best_k {
                eprintln!(
                    "epsilon {}: best k = {} with test MSE {:.4} ± {:.4}",
                    b.epsilon, b.k, b.mean_mse, b.std_error
                );
            }
        }
        Command::Export { common, n, d } => {
            let mut cfg = common.resolve(Config::default())?;
            if let Some(d) = d {
                cfg.d = d;
            }
            let paths = cmd_export_synthetic(&cfg, n)?;
            eprintln!("wrote {} and {}", paths.data.display(), paths.w_star.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Parse { .. } | Error::Domain(_) | Error::Unbounded { .. } => 2,
                Error::Singular { .. } => 3,
                _ => 1,
            })
        }
    }
}
