//! Confidence series of evaluation episodes.

use super::AnalysisError;
use crate::trainer::{Record, RunLog};

/// Per-step confidence series of one evaluation episode, selected by the
/// run-global episode index recorded in the log.
pub fn confidence_trace(log: &RunLog, episode_index: u64) -> Result<Vec<f64>, AnalysisError> {
    let mut available: Option<(u64, u64)> = None;
    for record in &log.records {
        if let Record::EvalEpisode {
            episode,
            confidences,
            ..
        } = record
        {
            if *episode == episode_index {
                return Ok(confidences.clone());
            }
            available = Some(match available {
                None => (*episode, *episode),
                Some((lo, hi)) => (lo.min(*episode), hi.max(*episode)),
            });
        }
    }
    Err(AnalysisError::EpisodeNotFound {
        requested: episode_index,
        available: match available {
            Some((lo, hi)) => format!("{lo}..={hi}"),
            None => "none".into(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_episode(episode: u64, confidences: Vec<f64>) -> Record {
        Record::EvalEpisode {
            step: 100,
            worker: 0,
            eval_index: 0,
            episode,
            ret: 1.0,
            len: confidences.len(),
            confidences,
        }
    }

    #[test]
    fn finds_episode_by_global_index() {
        let log = RunLog {
            records: vec![
                eval_episode(0, vec![0.5, 0.5]),
                eval_episode(1, vec![0.1, 0.2, 0.3]),
            ],
        };
        assert_eq!(confidence_trace(&log, 1).unwrap(), vec![0.1, 0.2, 0.3]);
        // constant-confidence network: flat series
        assert_eq!(confidence_trace(&log, 0).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn missing_episode_names_valid_range() {
        let log = RunLog {
            records: vec![eval_episode(2, vec![0.0]), eval_episode(5, vec![0.0])],
        };
        match confidence_trace(&log, 9) {
            Err(AnalysisError::EpisodeNotFound {
                requested: 9,
                available,
            }) => assert_eq!(available, "2..=5"),
            other => panic!("unexpected: {other:?}"),
        }
        let empty = RunLog { records: vec![] };
        assert!(confidence_trace(&empty, 0).is_err());
    }
}
