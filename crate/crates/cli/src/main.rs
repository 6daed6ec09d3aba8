use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graftopt::io::{self, RunConfig};
use graftopt::Error;

/// Optimize the orientations of elliptical cuts in a stretched elastic patch.
#[derive(Parser)]
#[command(name = "graftopt", version)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured optimization and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (overrides `parallel`).
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Compare analytic and finite-difference gradients at random designs.
    CheckGradient {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Mesh the starting design and export it without solving.
    Mesh {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load(path: &Path, out: Option<PathBuf>, seed: Option<u64>, parallel: Option<usize>) -> Result<RunConfig, Error> {
    io::load_config(path, |c| {
        if let Some(o) = out {
            c.output = o;
        }
        c.seed = seed.or(c.seed);
        c.parallel = parallel.or(c.parallel);
    })
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            parallel,
        } => {
            let cfg = load(&config, out, seed, parallel)?;
            let s = io::run(&cfg)?;
            println!("objective {}", s.objective);
            let deg: Vec<String> = s.design.angles().iter().map(|a| format!("{:.2}", a.to_degrees())).collect();
            println!("design (deg) [{}]", deg.join(", "));
            if let Some(r) = s.ga_stop {
                println!("ga stop: {r:?}");
            }
            if let Some(r) = s.gd_stop {
                println!("gd stop: {r:?}");
            }
            println!("artifacts in {}", s.output.display());
        }
        Command::CheckGradient {
            config,
            seed,
            parallel,
        } => {
            let cfg = load(&config, None, seed, parallel)?;
            let checks = io::check_gradients(&cfg)?;
            println!("{:>6} {:>5} {:>14} {:>14} {:>10}", "design", "entry", "analytic", "fd", "rel_err");
            let mut failed = 0;
            for (i, (_, c)) in checks.iter().enumerate() {
                let scale = c.finite_difference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (k, (a, f)) in c.analytic.iter().zip(&c.finite_difference).enumerate() {
                    let rel = if f.abs() >= cfg.check.floor * scale && scale > 0.0 {
                        format!("{:.3e}", (a - f).abs() / f.abs())
                    } else {
                        "-".to_string()
                    };
                    println!("{i:>6} {k:>5} {a:>14.6e} {f:>14.6e} {rel:>10}");
                }
                let (worst, signs) = c.compare(cfg.check.floor);
                let ok = worst <= cfg.check.tolerance && signs;
                failed += usize::from(!ok);
                println!(
                    "design {i}: max rel err {worst:.3e}, signs {}, {}",
                    if signs { "agree" } else { "DIFFER" },
                    if ok { "ok" } else { "FAIL" }
                );
            }
            println!("{} of {} designs within {}", checks.len() - failed, checks.len(), cfg.check.tolerance);
        }
        Command::Mesh { config, out, seed } => {
            let cfg = load(&config, out, seed, None)?;
            let (path, nv, nt) = io::export_mesh(&cfg)?;
            println!("{nv} vertices, {nt} triangles -> {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
