//! CSV, JSON and manifest writers.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use crate::args::Common;
use crate::CliError;

/// Per-invocation context: resolved seed, output directory and the files written so far.
pub struct Run {
    pub subcommand: &'static str,
    pub seed: u64,
    pub seed_generated: bool,
    out: PathBuf,
    started: Instant,
    written: Vec<String>,
}

impl Run {
    pub fn start(subcommand: &'static str, common: &Common) -> Result<Run, CliError> {
        if let Some(t) = common.threads {
            if t == 0 {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            // fails only if a pool already exists, which cannot happen in a fresh process
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
        fs::create_dir_all(&common.out)
            .map_err(|e| CliError::Runtime(format!("cannot create --out {}: {e}", common.out.display())))?;
        let (seed, seed_generated) = match common.seed {
            Some(s) => (s, false),
            None => (fresh_seed(), true),
        };
        Ok(Run {
            subcommand,
            seed,
            seed_generated,
            out: common.out.clone(),
            started: Instant::now(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.out.join(name)
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut text = header.join(",");
        text.push('\n');
        for r in rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        let path = self.path(name);
        write(&path, text)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        let path = self.path(name);
        write(&path, text)
    }

    /// Writes `manifest.json`: subcommand, resolved arguments, seed, version and wall time.
    pub fn finish<T: Serialize>(mut self, args: &T) -> Result<(), CliError> {
        let manifest = json!({
            "subcommand": self.subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "master_seed": self.seed,
            "seed_generated": self.seed_generated,
            "threads": rayon::current_num_threads(),
            "args": args,
            "outputs": self.written,
            "wall_time_seconds": self.started.elapsed().as_secs_f64(),
        });
        self.json("manifest.json", &manifest)
    }
}

fn write(path: &Path, text: String) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn fresh_seed() -> u64 {
    let t = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
    bootperc::rng::mix64(t ^ (std::process::id() as u64).rotate_left(32))
}

/// Shortest round-trip rendering, `nan` for missing values.
pub fn num(x: f64) -> String {
    format!("{x}")
}
