//! Confidence vs. value-change heatmap binning.

use super::AnalysisError;
use crate::trainer::{Record, RunLog};

/// Floor for the percent-change denominator, guarding near-zero values.
const DENOMINATOR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapCell {
    pub count: u64,
    /// Mean confidence of the states in this cell; 0 when the cell is empty
    /// (check `count`).
    pub mean_confidence: f64,
}

/// 2D histogram over (percent value change, training progress); each cell
/// holds the mean confidence assigned to the states that landed in it.
#[derive(Debug, Clone)]
pub struct HeatmapGrid {
    pub x_bins: usize,
    pub y_bins: usize,
    /// Width of one percent-change bin; the x axis spans [0, 100] with
    /// overflow clamped into the top bin.
    pub x_width: f64,
    /// Width of one training-progress bin in environment steps.
    pub y_width: u64,
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl HeatmapGrid {
    pub fn cell(&self, x: usize, y: usize) -> HeatmapCell {
        let i = y * self.x_bins + x;
        let count = self.counts[i];
        HeatmapCell {
            count,
            mean_confidence: if count > 0 {
                self.sums[i] / count as f64
            } else {
                0.0
            },
        }
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bin every logged `(confidence, value_before, value_after)` triple by the
/// absolute percent change of the value estimate (x) and by training
/// progress (y). Percent change uses `|before|` floored at 1e-8 as the
/// denominator. Binning is exhaustive: out-of-range changes clamp into the
/// top x bin.
pub fn confidence_value_change_bins(
    log: &RunLog,
    x_bins: usize,
    y_bins: usize,
) -> Result<HeatmapGrid, AnalysisError> {
    if x_bins == 0 || y_bins == 0 {
        return Err(AnalysisError::BadArgument("bin counts must be >= 1".into()));
    }
    let total_steps = match log.meta() {
        Some(Record::Meta { total_steps, .. }) => *total_steps,
        _ => return Err(AnalysisError::MissingRecords("no meta record".into())),
    };
    let x_width = 100.0 / x_bins as f64;
    let y_width = (total_steps / y_bins as u64).max(1);
    let mut grid = HeatmapGrid {
        x_bins,
        y_bins,
        x_width,
        y_width,
        sums: vec![0.0; x_bins * y_bins],
        counts: vec![0; x_bins * y_bins],
    };
    let mut seen = false;
    for record in &log.records {
        if let Record::Segment {
            step,
            value_changes,
            ..
        } = record
        {
            seen = true;
            for &(confidence, before, after) in value_changes {
                let pct = 100.0 * (after - before).abs() / before.abs().max(DENOMINATOR_FLOOR);
                let x = ((pct / x_width) as usize).min(x_bins - 1);
                let y = ((step / y_width) as usize).min(y_bins - 1);
                let i = y * x_bins + x;
                grid.sums[i] += confidence;
                grid.counts[i] += 1;
            }
        }
    }
    if !seen {
        return Err(AnalysisError::MissingRecords(
            "no segment records with value changes".into(),
        ));
    }
    Ok(grid)
}
