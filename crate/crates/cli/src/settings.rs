//! Run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use mfrg_core::config::KeyValueFile;
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

/// Experiment families, one per sweep subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Lmg,
    Fermion,
    Verify,
    Mfrg,
    Mps,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Lmg => "lmg",
            Kind::Fermion => "fermion",
            Kind::Verify => "verify",
            Kind::Mfrg => "mfrg",
            Kind::Mps => "mps",
        }
    }

    /// File written into the output directory.
    pub fn file_name(self) -> &'static str {
        match self {
            Kind::Lmg => "lmg_sweep.csv",
            Kind::Fermion => "fermion_sweep.csv",
            Kind::Verify => "verify_report.csv",
            Kind::Mfrg => "mfrg_trace.csv",
            Kind::Mps => "mps_compress.csv",
        }
    }

    fn accepts(self, key: &str) -> bool {
        if matches!(key, "kind" | "seed" | "samples" | "workers") {
            return true;
        }
        let section = key.split('.').next().unwrap_or("");
        match self {
            Kind::Lmg => section == "lmg",
            Kind::Fermion => section == "fermion",
            Kind::Verify => section == "verify",
            Kind::Mfrg => matches!(section, "mfrg" | "model" | "level") || key == "stop_dim",
            Kind::Mps => matches!(section, "mps" | "model"),
        }
    }
}

/// Seed used when neither the config nor the command line sets one.
pub const DEFAULT_SEED: u64 = 1;

/// Samples per fermion grid point when not configured.
pub const DEFAULT_SAMPLES: usize = 100;

/// A validated config file with command-line overrides applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: Kind,
    pub file: KeyValueFile,
    pub base_seed: u64,
    pub samples: usize,
    /// Worker threads; never part of the config hash.
    pub workers: usize,
    pub config_hash: String,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(kind: Kind, path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_text(kind, &text, overrides)
    }

    pub fn from_text(kind: Kind, text: &str, overrides: &Overrides) -> Result<Self> {
        let mut file = KeyValueFile::parse(text)?;
        file.reject_unknown(|k| kind.accepts(k))?;
        match file.get::<String>("kind")? {
            Some(k) if k != kind.name() => {
                return Err(CliError::Usage(format!("config is for `{k}`, not `{}`", kind.name())));
            }
            _ => file.set("kind", kind.name()),
        }
        if let Some(s) = overrides.seed {
            file.set("seed", s.to_string());
        }
        if let Some(s) = overrides.samples {
            file.set("samples", s.to_string());
        }
        let base_seed = file.get_or("seed", DEFAULT_SEED)?;
        let samples = file.get_or("samples", DEFAULT_SAMPLES)?;
        if samples == 0 {
            return Err(CliError::Usage("samples must be at least 1".into()));
        }
        let workers = match overrides.workers {
            Some(w) => w,
            None => file.get_or("workers", 0)?,
        };
        let workers = if workers == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { workers };
        let config_hash = hash_without_workers(&file);
        Ok(Self { kind, file, base_seed, samples, workers, config_hash })
    }

    /// List-valued key with a default; an empty value gives an empty grid.
    pub fn grid<T: std::str::FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        Ok(self.file.get_list(key)?.unwrap_or_else(|| default.to_vec()))
    }

    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.file.get_or(key, default)?)
    }

    /// First line of every CSV.
    pub fn header_comment(&self) -> String {
        format!("# mfrg kind={} config_hash={} base_seed={}", self.kind.name(), self.config_hash, self.base_seed)
    }

    pub fn output_path(&self, dir: &Path) -> PathBuf {
        dir.join(self.kind.file_name())
    }

    /// Run `f` on a pool with the configured number of threads.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", self.workers)))?;
        Ok(pool.install(f))
    }
}

fn hash_without_workers(file: &KeyValueFile) -> String {
    let canonical: String = file
        .canonical()
        .lines()
        .filter(|l| !l.starts_with("workers="))
        .map(|l| format!("{l}\n"))
        .collect();
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}
