//! Difference between learned confidence weights and analytic lambda
//! weights, aligned by logged-state ordinal.

use super::AnalysisError;
use crate::returns::lambda_weight_vector;
use crate::trainer::{Record, RunLog};

/// Per-state weight differences, each row padded with zeros to `window`
/// entries (one per lookahead depth `n = 1..=window`).
#[derive(Debug, Clone)]
pub struct WeightDiffTrace {
    pub window: usize,
    pub rows: Vec<Vec<f64>>,
}

fn log_window(log: &RunLog) -> Result<usize, AnalysisError> {
    match log.meta() {
        Some(Record::Meta { window, .. }) => Ok(*window),
        _ => Err(AnalysisError::MissingRecords("no meta record".into())),
    }
}

/// Subtract the analytic lambda weights (derived from the second log's
/// available-return counts) from the confidence weight rows logged by a
/// `car` run. The traces are aligned by the order states were logged in;
/// the result is truncated to the shorter trace.
pub fn weight_diff_trace(
    log_car: &RunLog,
    log_lr: &RunLog,
    lambda: f64,
) -> Result<WeightDiffTrace, AnalysisError> {
    let window = log_window(log_car)?.max(log_window(log_lr)?);

    let mut car_rows: Vec<&[f64]> = Vec::new();
    for record in &log_car.records {
        if let Record::Segment {
            weights: Some(rows),
            ..
        } = record
        {
            for row in rows {
                car_rows.push(row);
            }
        }
    }
    if car_rows.is_empty() {
        return Err(AnalysisError::MissingRecords(
            "first log carries no confidence weight rows (is it a car run?)".into(),
        ));
    }

    let mut lr_lengths: Vec<usize> = Vec::new();
    for record in &log_lr.records {
        if let Record::Segment { len, .. } = record {
            for j in 0..*len {
                lr_lengths.push(len - j);
            }
        }
    }
    if lr_lengths.is_empty() {
        return Err(AnalysisError::MissingRecords(
            "second log carries no segment records".into(),
        ));
    }

    let count = car_rows.len().min(lr_lengths.len());
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let car = car_rows[i];
        let lr = lambda_weight_vector(lr_lengths[i], lambda)?;
        if car.len() > window || lr.len() > window {
            return Err(AnalysisError::BadArgument(format!(
                "weight row longer than window {window}"
            )));
        }
        let mut diff = vec![0.0; window];
        for (n, &w) in car.iter().enumerate() {
            diff[n] += w;
        }
        for (n, &w) in lr.iter().enumerate() {
            diff[n] -= w;
        }
        rows.push(diff);
    }
    Ok(WeightDiffTrace { window, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::returns::MixerMode;

    fn meta(mode: MixerMode, window: usize) -> Record {
        Record::Meta {
            step: 0,
            worker: 0,
            env: "random_walk".into(),
            mode,
            lambda: None,
            window,
            gamma: 0.99,
            total_steps: 100,
            seed: 0,
            workers: 1,
        }
    }

    fn segment(len: usize, weights: Option<Vec<Vec<f64>>>) -> Record {
        Record::Segment {
            step: len as u64,
            worker: 0,
            len,
            terminal: false,
            lr: 1e-3,
            targets: vec![0.0; len],
            weights,
            value_changes: vec![(0.0, 0.0, 0.0); len],
            actor_objective: 0.0,
            critic_loss: 0.0,
            entropy: 0.0,
            grad_norm: 0.0,
        }
    }

    #[test]
    fn uniform_car_minus_lambda_one() {
        // One logged state with uniform weights over 4 returns, against
        // lambda = 1 (all mass on the longest): (.25, .25, .25, -.75).
        let car_log = RunLog {
            records: vec![
                meta(MixerMode::Car, 4),
                segment(1, Some(vec![vec![0.25; 4]])),
            ],
        };
        // A length-4 state on the lambda side: logged as the first state of
        // a 4-step segment.
        let lr_log = RunLog {
            records: vec![meta(MixerMode::Lambda, 4), segment(4, None)],
        };
        let trace = weight_diff_trace(&car_log, &lr_log, 1.0).unwrap();
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.rows[0], vec![0.25, 0.25, 0.25, -0.75]);
    }

    #[test]
    fn identical_weights_give_zero_rows_and_m1_is_always_zero() {
        let car_log = RunLog {
            records: vec![
                meta(MixerMode::Car, 3),
                segment(1, Some(vec![vec![1.0]])),
            ],
        };
        let lr_log = RunLog {
            records: vec![meta(MixerMode::Lambda, 3), segment(1, None)],
        };
        let trace = weight_diff_trace(&car_log, &lr_log, 0.7).unwrap();
        assert_eq!(trace.rows[0], vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_weight_rows_is_an_error() {
        let car_log = RunLog {
            records: vec![meta(MixerMode::Car, 3), segment(2, None)],
        };
        let lr_log = RunLog {
            records: vec![meta(MixerMode::Lambda, 3), segment(2, None)],
        };
        assert!(matches!(
            weight_diff_trace(&car_log, &lr_log, 0.9),
            Err(AnalysisError::MissingRecords(_))
        ));
    }
}
