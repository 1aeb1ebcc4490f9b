//! Post-hoc analyses over run logs, checkpoints, and score tables.

mod bins;
mod scores;
mod traces;
mod value_error;
mod weights;

pub use bins::{confidence_value_change_bins, HeatmapCell, HeatmapGrid};
pub use scores::{
    normalized_scores, percent_improvement, ImprovementRow, NormalizedScores, ScoreRow, ScoreTable,
};
pub use traces::confidence_trace;
pub use value_error::{value_error_curve, ValueErrorPoint, ValueErrorReference};
pub use weights::{weight_diff_trace, WeightDiffTrace};

use crate::env::EnvError;
use crate::net::NetError;
use crate::returns::ReturnsError;
use crate::trainer::RunLogError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("score table invalid: {0}")]
    BadTable(String),
    #[error("run log lacks required records: {0}")]
    MissingRecords(String),
    #[error("evaluation episode {requested} not in log (available: {available})")]
    EpisodeNotFound { requested: u64, available: String },
    #[error("bad argument: {0}")]
    BadArgument(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Log(#[from] RunLogError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Returns(#[from] ReturnsError),
}
