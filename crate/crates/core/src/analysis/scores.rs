//! Baseline-normalized score statistics and per-task improvement.

use super::AnalysisError;
use std::path::Path;

/// Raw scores for one task under the three methods.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub task: String,
    pub car: f64,
    pub lr: f64,
    pub a3c: f64,
}

/// A score table; the bundled fixture carries 22 Atari tasks.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    /// Read a headered CSV with columns `task,cara3c,lra3c,a3c`.
    pub fn from_csv_path(path: &Path) -> Result<Self, AnalysisError> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let expected = ["task", "cara3c", "lra3c", "a3c"];
        let header_fields: Vec<&str> = headers.iter().collect();
        if header_fields != expected {
            return Err(AnalysisError::BadTable(format!(
                "expected header {expected:?}, found {header_fields:?}"
            )));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64, AnalysisError> {
                record[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| AnalysisError::BadTable(format!("bad number `{}`", &record[i])))
            };
            let row = ScoreRow {
                task: record[0].to_string(),
                car: parse(1)?,
                lr: parse(2)?,
                a3c: parse(3)?,
            };
            if !(row.car.is_finite() && row.lr.is_finite() && row.a3c.is_finite()) {
                return Err(AnalysisError::BadTable(format!(
                    "non-finite score in task {}",
                    row.task
                )));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(AnalysisError::BadTable("no data rows".into()));
        }
        Ok(ScoreTable { rows })
    }
}

/// Mean and median of baseline-normalized scores per method. Tasks with a
/// zero baseline score cannot form a ratio and are listed in `excluded`.
#[derive(Debug, Clone)]
pub struct NormalizedScores {
    pub car_mean: f64,
    pub car_median: f64,
    pub lr_mean: f64,
    pub lr_median: f64,
    pub tasks_used: usize,
    pub excluded: Vec<String>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

pub fn normalized_scores(table: &ScoreTable) -> Result<NormalizedScores, AnalysisError> {
    let mut car = Vec::new();
    let mut lr = Vec::new();
    let mut excluded = Vec::new();
    for row in &table.rows {
        if row.a3c == 0.0 {
            excluded.push(row.task.clone());
            continue;
        }
        car.push(row.car / row.a3c);
        lr.push(row.lr / row.a3c);
    }
    if car.is_empty() {
        return Err(AnalysisError::BadTable(
            "every row has a zero baseline score".into(),
        ));
    }
    let car_mean = car.iter().sum::<f64>() / car.len() as f64;
    let lr_mean = lr.iter().sum::<f64>() / lr.len() as f64;
    car.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lr.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(NormalizedScores {
        car_mean,
        car_median: median(&car),
        lr_mean,
        lr_median: median(&lr),
        tasks_used: car.len(),
        excluded,
    })
}

/// Per-task percent improvement over the baseline, `100 (p - q) / q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementRow {
    pub task: String,
    pub car_pct: f64,
    pub lr_pct: f64,
}

pub fn percent_improvement(
    table: &ScoreTable,
) -> Result<(Vec<ImprovementRow>, Vec<String>), AnalysisError> {
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for row in &table.rows {
        if row.a3c == 0.0 {
            excluded.push(row.task.clone());
            continue;
        }
        rows.push(ImprovementRow {
            task: row.task.clone(),
            car_pct: 100.0 * (row.car - row.a3c) / row.a3c,
            lr_pct: 100.0 * (row.lr - row.a3c) / row.a3c,
        });
    }
    if rows.is_empty() {
        return Err(AnalysisError::BadTable(
            "every row has a zero baseline score".into(),
        ));
    }
    Ok((rows, excluded))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, f64, f64, f64)]) -> ScoreTable {
        ScoreTable {
            rows: rows
                .iter()
                .map(|(t, c, l, a)| ScoreRow {
                    task: t.to_string(),
                    car: *c,
                    lr: *l,
                    a3c: *a,
                })
                .collect(),
        }
    }

    #[test]
    fn identity_table_normalizes_to_one() {
        let t = table(&[("a", 5.0, 5.0, 5.0), ("b", 2.0, 2.0, 2.0)]);
        let s = normalized_scores(&t).unwrap();
        assert_eq!(s.car_mean, 1.0);
        assert_eq!(s.car_median, 1.0);
        assert_eq!(s.lr_mean, 1.0);
        assert_eq!(s.lr_median, 1.0);
    }

    #[test]
    fn even_count_median_averages_central_pair() {
        let t = table(&[
            ("a", 1.0, 1.0, 1.0),
            ("b", 2.0, 2.0, 1.0),
            ("c", 3.0, 3.0, 1.0),
            ("d", 4.0, 4.0, 1.0),
        ]);
        let s = normalized_scores(&t).unwrap();
        assert_eq!(s.car_median, 2.5);
    }

    #[test]
    fn zero_baseline_rows_are_excluded_with_warning() {
        let t = table(&[("ok", 2.0, 3.0, 1.0), ("degenerate", 5.0, 5.0, 0.0)]);
        let s = normalized_scores(&t).unwrap();
        assert_eq!(s.tasks_used, 1);
        assert_eq!(s.excluded, vec!["degenerate".to_string()]);
        let (rows, excluded) = percent_improvement(&t).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(excluded, vec!["degenerate".to_string()]);
    }

    #[test]
    fn improvement_identity_and_doubling() {
        let t = table(&[("same", 7.0, 7.0, 7.0), ("double", 14.0, 7.0, 7.0)]);
        let (rows, _) = percent_improvement(&t).unwrap();
        assert_eq!(rows[0].car_pct, 0.0);
        assert_eq!(rows[1].car_pct, 100.0);
        assert_eq!(rows[1].lr_pct, 0.0);
    }
}
