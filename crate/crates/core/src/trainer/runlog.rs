//! Append-only run log: newline-delimited JSON records.
//!
//! Schema (one JSON object per line, `type` tag selects the variant):
//!
//! * `meta`          - run header: environment, mixer, window, gamma,
//!                     total_steps, seed, workers.
//! * `segment`       - one applied (or skipped) update: step, worker, segment
//!                     length, per-state targets, the per-state confidence
//!                     weight rows (`car` runs only), per-state
//!                     `[confidence, value_before, value_after]` triples,
//!                     and loss diagnostics.
//! * `eval`          - mean undiscounted return over an evaluation round.
//! * `eval_episode`  - one evaluation episode: return, length, and the
//!                     per-step confidence series.
//! * `checkpoint`    - a checkpoint file written at an evaluation point.
//! * `skipped`       - an update rejected for non-finite losses/gradients.
//!
//! Records never contain timestamps or non-finite floats, so a run with one
//! worker serializes to identical bytes on every repetition.

use crate::returns::MixerMode;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("log line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("serialize: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// `[confidence, value_before, value_after]` for one state of a segment.
pub type ValueChange = (f64, f64, f64);

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Meta {
        step: u64,
        worker: u32,
        env: String,
        mode: MixerMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        window: usize,
        gamma: f64,
        total_steps: u64,
        seed: u64,
        workers: usize,
    },
    Segment {
        step: u64,
        worker: u32,
        len: usize,
        terminal: bool,
        lr: f64,
        targets: Vec<f64>,
        /// Suffix weight rows, one per state, `car` runs only.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<Vec<f64>>>,
        value_changes: Vec<ValueChange>,
        actor_objective: f64,
        critic_loss: f64,
        entropy: f64,
        grad_norm: f64,
    },
    Eval {
        step: u64,
        worker: u32,
        eval_index: u64,
        mean_return: f64,
        episodes: usize,
    },
    EvalEpisode {
        step: u64,
        worker: u32,
        eval_index: u64,
        /// Run-global evaluation-episode index (what `conf-trace` selects).
        episode: u64,
        ret: f64,
        len: usize,
        confidences: Vec<f64>,
    },
    Checkpoint {
        step: u64,
        worker: u32,
        path: String,
    },
    Skipped {
        step: u64,
        worker: u32,
        reason: String,
    },
}

impl Record {
    pub fn step(&self) -> u64 {
        match self {
            Record::Meta { step, .. }
            | Record::Segment { step, .. }
            | Record::Eval { step, .. }
            | Record::EvalEpisode { step, .. }
            | Record::Checkpoint { step, .. }
            | Record::Skipped { step, .. } => *step,
        }
    }
}

/// A full run log held in memory.
#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub records: Vec<Record>,
}

impl RunLog {
    pub fn read_ndjson(path: &Path) -> Result<Self, RunLogError> {
        let reader = BufReader::new(File::open(path)?);
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line)
                .map_err(|source| RunLogError::Parse { line: i + 1, source })?;
            records.push(record);
        }
        Ok(RunLog { records })
    }

    pub fn write_ndjson(&self, path: &Path) -> Result<(), RunLogError> {
        let mut w = BufWriter::new(File::create(path)?);
        for record in &self.records {
            serde_json::to_writer(&mut w, record)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn meta(&self) -> Option<&Record> {
        self.records
            .iter()
            .find(|r| matches!(r, Record::Meta { .. }))
    }
}

/// Thread-safe sink the trainer appends to: an in-memory vector plus an
/// optional streaming ndjson file, kept in the same order.
pub struct LogSink {
    inner: Mutex<SinkInner>,
}

struct SinkInner {
    records: Vec<Record>,
    file: Option<BufWriter<File>>,
}

impl LogSink {
    pub fn new(path: Option<&Path>) -> Result<Self, RunLogError> {
        let file = match path {
            Some(p) => Some(BufWriter::new(File::create(p)?)),
            None => None,
        };
        Ok(LogSink {
            inner: Mutex::new(SinkInner {
                records: Vec::new(),
                file,
            }),
        })
    }

    pub fn append(&self, record: Record) -> Result<(), RunLogError> {
        let mut inner = self.inner.lock().expect("log sink lock");
        if let Some(file) = inner.file.as_mut() {
            serde_json::to_writer(&mut *file, &record)?;
            file.write_all(b"\n")?;
        }
        inner.records.push(record);
        Ok(())
    }

    pub fn finish(self) -> Result<RunLog, RunLogError> {
        let mut inner = self.inner.into_inner().expect("log sink lock");
        if let Some(file) = inner.file.as_mut() {
            file.flush()?;
        }
        Ok(RunLog {
            records: inner.records,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ndjson_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runlog.ndjson");
        let sink = LogSink::new(Some(&path)).unwrap();
        sink.append(Record::Meta {
            step: 0,
            worker: 0,
            env: "random_walk:19".into(),
            mode: MixerMode::Car,
            lambda: None,
            window: 20,
            gamma: 0.99,
            total_steps: 1000,
            seed: 7,
            workers: 1,
        })
        .unwrap();
        sink.append(Record::Segment {
            step: 20,
            worker: 0,
            len: 2,
            terminal: false,
            lr: 1e-3,
            targets: vec![0.5, -0.25],
            weights: Some(vec![vec![0.6, 0.4], vec![1.0]]),
            value_changes: vec![(0.1, 0.0, 0.05), (0.2, 0.1, 0.12)],
            actor_objective: -0.3,
            critic_loss: 0.2,
            entropy: 0.69,
            grad_norm: 1.5,
        })
        .unwrap();
        let log = sink.finish().unwrap();
        let reread = RunLog::read_ndjson(&path).unwrap();
        assert_eq!(log.records, reread.records);
        assert!(matches!(reread.meta(), Some(Record::Meta { .. })));
    }
}
