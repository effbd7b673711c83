//! Per-run output directories.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use gravopt::{EvalRecord, IterationRecord, ParamVector};
use serde::Serialize;
use serde_json::Value;

pub const MANIFEST: &str = "manifest.json";
pub const HISTORY: &str = "history.csv";
pub const RESULT: &str = "result.json";
pub const PARTIAL: &str = "partial.json";
pub const EVALUATIONS: &str = "evaluations.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Completed,
    Aborted,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub parallelism: usize,
    pub started: String,
    pub finished: String,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: Value,
}

/// The reproducible part of a run: no timestamps, no durations.
#[derive(Debug, Serialize)]
pub struct ResultDoc<'a> {
    pub best_params: &'a ParamVector,
    pub best_fitness: f64,
    pub evaluations: usize,
    pub cache_hits: usize,
    pub seed: u64,
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub struct RunDir {
    path: PathBuf,
    log: BufWriter<File>,
}

impl RunDir {
    /// Creates `<root>/<UTC timestamp>-seed<seed>`, adding a counter suffix
    /// rather than ever reusing an existing directory.
    pub fn create(root: &Path, started: DateTime<Utc>, seed: u64) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let stem = format!("{}-seed{seed}", started.format("%Y%m%dT%H%M%S%.3fZ"));
        let mut n = 0;
        let path = loop {
            let name = if n == 0 {
                stem.clone()
            } else {
                format!("{stem}-{n}")
            };
            let candidate = root.join(name);
            match fs::create_dir(&candidate) {
                Ok(()) => break candidate,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
                Err(e) => {
                    return Err(e).with_context(|| format!("creating {}", candidate.display()))
                }
            }
        };
        let log = BufWriter::new(File::create(path.join(EVALUATIONS))?);
        Ok(Self { path, log })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn log_evaluation(&mut self, record: &EvalRecord) -> Result<()> {
        serde_json::to_writer(&mut self.log, record)?;
        self.log.write_all(b"\n")?;
        Ok(())
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        fs::write(self.path.join(name), text).with_context(|| format!("writing {name}"))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_history(&self, dims: usize, history: &[IterationRecord]) -> Result<()> {
        let file = File::create(self.path.join(HISTORY))?;
        gravopt::history::write_csv(BufWriter::new(file), dims, history)?;
        Ok(())
    }

    pub fn finish(mut self, manifest: &Manifest) -> Result<PathBuf> {
        self.log.flush()?;
        self.write_json(MANIFEST, manifest)?;
        Ok(self.path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directories_are_never_reused() {
        let root = tempfile::tempdir().unwrap();
        let t = Utc::now();
        let a = RunDir::create(root.path(), t, 5).unwrap();
        let b = RunDir::create(root.path(), t, 5).unwrap();
        assert_ne!(a.path(), b.path());
        assert!(a
            .path()
            .file_name()
            .unwrap()
            .to_str()
            .unwrap()
            .ends_with("-seed5"));
        assert!(b
            .path()
            .file_name()
            .unwrap()
            .to_str()
            .unwrap()
            .ends_with("-seed5-1"));
    }
}
