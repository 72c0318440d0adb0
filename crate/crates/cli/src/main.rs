use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod verbs;

/// Spin-interference resonances of a driven spin-orbit quantum dot.
#[derive(Debug, Parser)]
#[command(name = "sointerf", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config layered over the verb's preset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory [default: out/<verb>].
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Replace one config quantity, e.g. `protocol.E0_u=250`.
    #[arg(long = "override", short = 's', global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for scans.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Use the time-dependent solver instead of the delta-pulse spectrum.
    #[arg(long, global = true)]
    numeric: bool,
    /// Scan grid in the swept variable's units (E0 in u).
    #[arg(long, global = true, value_name = "START:STOP:COUNT", value_parser = parse_grid)]
    grid: Option<(f64, f64, usize)>,
    /// Seed for random test data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Preset to start from [default: the verb's own, or `reference`].
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Resonance comb at T = 5 pi and 40 pi.
    Fig2,
    /// Combs for four initial spin states.
    Fig3,
    /// First resonance against the field direction.
    Fig4,
    /// Combs with a quartic confinement term.
    Fig5,
    /// Comb spacing of common dot materials.
    Table1,
    /// Q along the configured scan.
    Sweep,
    /// Recover alpha, phi and the Zeeman coupling from a comb.
    Estimate {
        /// Peaks CSV (`order` plus `position` or `position_u`); simulated when absent.
        #[arg(long, value_name = "PATH")]
        peaks: Option<PathBuf>,
        /// Angular CSV (`theta`, `E0k_numeric` in u), as written by fig4.
        #[arg(long, value_name = "PATH", requires = "peaks")]
        theta: Option<PathBuf>,
    },
    /// Spin polarisation and fields against time for one run.
    Trace {
        /// End time in natural units [default: switch time + averaging span].
        #[arg(long)]
        t_end: Option<f64>,
    },
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err("expected START:STOP:COUNT".into());
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    let count = n.trim().parse::<usize>().map_err(|e| format!("`{n}`: {e}"))?;
    Ok((num(a)?, num(b)?, count))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match &cli.verb {
        Verb::Fig2 => verbs::fig2(&cli.common),
        Verb::Fig3 => verbs::fig3(&cli.common),
        Verb::Fig4 => verbs::fig4(&cli.common),
        Verb::Fig5 => verbs::fig5(&cli.common),
        Verb::Table1 => verbs::table1(&cli.common),
        Verb::Sweep => verbs::sweep_verb(&cli.common),
        Verb::Estimate { peaks, theta } => verbs::estimate(&cli.common, peaks.as_deref(), theta.as_deref()),
        Verb::Trace { t_end } => verbs::trace(&cli.common, *t_end),
    };
    match result {
        Ok(manifest) => {
            log::info!("wrote {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
