use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfrg_cli::experiments::run_to_file;
use mfrg_cli::plot::write_plot_script;
use mfrg_cli::{CliError, Kind, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "mfrg", version, about = "Ground states, entanglement and mean-field renormalization of fully connected models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Base seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Samples per grid point; overrides the config.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Dicke-basis LMG sweep over n, gamma and h.
    LmgSweep(Common),
    /// Sample-averaged random fermion sweep over n, mu and kappa.
    FermionSweep(Common),
    /// Check every inequality on a seeded family of random instances.
    Verify(Common),
    /// Run a renormalization schedule and write its trace.
    MfrgRun(Common),
    /// Compress a ground state into MPS over a range of bond dimensions.
    MpsCompress(Common),
    /// Emit a matplotlib script for a CSV.
    PlotScript {
        /// CSV written by one of the sweeps.
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Lmg,
    Fermion,
    Verify,
    Mfrg,
    Mps,
}

impl From<PlotKind> for Kind {
    fn from(k: PlotKind) -> Self {
        match k {
            PlotKind::Lmg => Kind::Lmg,
            PlotKind::Fermion => Kind::Fermion,
            PlotKind::Verify => Kind::Verify,
            PlotKind::Mfrg => Kind::Mfrg,
            PlotKind::Mps => Kind::Mps,
        }
    }
}

fn sweep(kind: Kind, c: &Common) -> Result<(), CliError> {
    let overrides = Overrides { seed: c.seed, samples: c.samples, workers: c.workers };
    let cfg = RunConfig::load(kind, c.config.as_deref(), &overrides)?;
    let (path, outcome) = run_to_file(&cfg, &c.out)?;
    println!("wrote {} ({} rows)", path.display(), outcome.table.rows.len());
    if outcome.violations > 0 {
        return Err(CliError::Violations(outcome.violations));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::LmgSweep(c) => sweep(Kind::Lmg, c),
        Command::FermionSweep(c) => sweep(Kind::Fermion, c),
        Command::Verify(c) => sweep(Kind::Verify, c),
        Command::MfrgRun(c) => sweep(Kind::Mfrg, c),
        Command::MpsCompress(c) => sweep(Kind::Mps, c),
        Command::PlotScript { csv, kind, out } => write_plot_script(csv, (*kind).into(), out).map(|p| println!("wrote {}", p.display())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
