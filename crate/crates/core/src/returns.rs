//! TD-target construction: n-step returns, truncated lambda-returns, and
//! confidence-weighted autodidactic returns.
//!
//! A rollout segment of length `M` makes `M - j` multi-step returns available
//! to the state at index `j`: bootstrap after 1 step, after 2 steps, ...,
//! up to the end of the segment. A target is any convex mixture of those
//! returns. The three mixers differ only in where the mixture weights come
//! from:
//!
//! * `nstep`  - all weight on the longest available return,
//! * `lambda` - exponentially decaying weights `(1-l) l^(n-1)` with the
//!   leftover mass `l^(h-1)` on the longest return,
//! * `car`    - a softmax over the learned confidence scalars of the
//!   bootstrap states, so the agent itself decides which value estimates
//!   to trust.
//!
//! [`oracle_targets`] re-derives every target by literal enumeration and is
//! the reference the fast path is tested against.

use crate::env::Observation;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReturnsError {
    #[error("segment invalid: {0}")]
    BadSegment(String),
    #[error("n-step lookahead out of range: j = {j}, n = {n}, segment length {m}")]
    LookaheadOutOfRange { j: usize, n: usize, m: usize },
    #[error("lambda {0} outside [0, 1]")]
    BadLambda(f64),
    #[error("horizon must be >= 1")]
    EmptyHorizon,
    #[error("segment length {m} exceeds mixer window {window}")]
    WindowExceeded { m: usize, window: usize },
    #[error("mixer config invalid: {0}")]
    BadMixer(String),
}

/// Which mixture of multi-step returns forms the TD target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixerMode {
    NStep,
    Lambda,
    Car,
}

impl std::fmt::Display for MixerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MixerMode::NStep => write!(f, "nstep"),
            MixerMode::Lambda => write!(f, "lambda"),
            MixerMode::Car => write!(f, "car"),
        }
    }
}

/// Mixer selection plus the maximum rollout length it will accept.
#[derive(Debug, Clone, PartialEq)]
pub struct MixerConfig {
    pub mode: MixerMode,
    /// Present exactly when `mode == Lambda`.
    pub lambda: Option<f64>,
    /// Maximum segment length the mixer accepts (the rollout window K).
    pub window: usize,
}

impl MixerConfig {
    pub fn nstep(window: usize) -> Self {
        MixerConfig {
            mode: MixerMode::NStep,
            lambda: None,
            window,
        }
    }

    pub fn lambda(lambda: f64, window: usize) -> Self {
        MixerConfig {
            mode: MixerMode::Lambda,
            lambda: Some(lambda),
            window,
        }
    }

    pub fn car(window: usize) -> Self {
        MixerConfig {
            mode: MixerMode::Car,
            lambda: None,
            window,
        }
    }

    pub fn validate(&self) -> Result<(), ReturnsError> {
        if self.window == 0 {
            return Err(ReturnsError::BadMixer("window must be >= 1".into()));
        }
        match (self.mode, self.lambda) {
            (MixerMode::Lambda, Some(l)) => {
                if !(0.0..=1.0).contains(&l) {
                    return Err(ReturnsError::BadLambda(l));
                }
            }
            (MixerMode::Lambda, None) => {
                return Err(ReturnsError::BadMixer(
                    "lambda mode requires a lambda value".into(),
                ));
            }
            (_, Some(_)) => {
                return Err(ReturnsError::BadMixer(
                    "lambda value only valid in lambda mode".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

/// One rollout window collected by a worker under a fixed parameter snapshot.
///
/// Index convention: entry `j` describes the step taken *from* state
/// `s_(t+j)`. `rewards[j]` is the reward received for that step, and
/// `confidences[j]`, `boot_values[j]`, `next_observations[j]` all describe
/// the successor state `s_(t+j+1)`. The confidence of a terminal successor
/// is still recorded (it participates in the softmax weights), but its
/// bootstrap value is forced to 0.
///
/// `observations`, `actions`, and `next_observations` may be left empty when
/// a segment is built purely for target arithmetic; the gradient path
/// requires them.
#[derive(Debug, Clone)]
pub struct TrajectorySegment {
    pub observations: Vec<Observation>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub confidences: Vec<f64>,
    pub boot_values: Vec<f64>,
    pub next_observations: Vec<Observation>,
    pub bootstrap_value: f64,
    pub terminal: bool,
    pub gamma: f64,
}

impl TrajectorySegment {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn validate(&self) -> Result<(), ReturnsError> {
        let m = self.rewards.len();
        if m == 0 {
            return Err(ReturnsError::BadSegment("segment length must be >= 1".into()));
        }
        if self.confidences.len() != m || self.boot_values.len() != m {
            return Err(ReturnsError::BadSegment(format!(
                "confidences/boot_values length must equal rewards length {m}"
            )));
        }
        for (name, len) in [
            ("observations", self.observations.len()),
            ("actions", self.actions.len()),
            ("next_observations", self.next_observations.len()),
        ] {
            if len != 0 && len != m {
                return Err(ReturnsError::BadSegment(format!(
                    "{name} length {len} must be 0 or {m}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(ReturnsError::BadSegment(format!(
                "gamma {} outside [0, 1)",
                self.gamma
            )));
        }
        if self.terminal && self.bootstrap_value != 0.0 {
            return Err(ReturnsError::BadSegment(
                "terminal segment must have bootstrap_value 0".into(),
            ));
        }
        if self.boot_values[m - 1] != self.bootstrap_value {
            return Err(ReturnsError::BadSegment(
                "last boot_values entry must equal bootstrap_value".into(),
            ));
        }
        let all_finite = self
            .rewards
            .iter()
            .chain(&self.confidences)
            .chain(&self.boot_values)
            .chain(std::iter::once(&self.bootstrap_value))
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(ReturnsError::BadSegment("non-finite entry".into()));
        }
        Ok(())
    }
}

/// Per-state mixture weights over the available multi-step returns.
/// `rows()[j][k]` is the weight state `j` puts on the return that bootstraps
/// from `boot_values[k]`; entries below the diagonal are exactly zero and
/// each row sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<Vec<f64>>,
}

impl WeightMatrix {
    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }

    /// The nonzero tail of row `j`: weights for bootstrap states `j..M`.
    pub fn suffix_row(&self, j: usize) -> &[f64] {
        &self.rows[j][j..]
    }
}

/// The n-step return for state index `j`: `n` discounted rewards followed by
/// the discounted value of the n-th successor (zero when that successor is
/// terminal).
pub fn n_step_return(seg: &TrajectorySegment, j: usize, n: usize) -> Result<f64, ReturnsError> {
    let m = seg.len();
    if n == 0 || j + n > m {
        return Err(ReturnsError::LookaheadOutOfRange { j, n, m });
    }
    let mut acc = 0.0;
    let mut discount = 1.0;
    for i in 0..n {
        acc += discount * seg.rewards[j + i];
        discount *= seg.gamma;
    }
    Ok(acc + discount * seg.boot_values[j + n - 1])
}

/// Exponentially decaying mixture weights over horizons `1..=h`:
/// `(1-l) l^(n-1)` for `n < h` and the leftover mass `l^(h-1)` on `n = h`.
/// Sums to one for every `h >= 1` and `l` in `[0, 1]`.
pub fn lambda_weight_vector(h: usize, lambda: f64) -> Result<Vec<f64>, ReturnsError> {
    if h == 0 {
        return Err(ReturnsError::EmptyHorizon);
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ReturnsError::BadLambda(lambda));
    }
    let mut w = Vec::with_capacity(h);
    let mut pow = 1.0; // lambda^(n-1)
    for _ in 0..h.saturating_sub(1) {
        w.push((1.0 - lambda) * pow);
        pow *= lambda;
    }
    w.push(pow);
    Ok(w)
}

/// Softmax of the confidence scalars, computed with max subtraction.
pub fn confidence_weights(confidence_suffix: &[f64]) -> Result<Vec<f64>, ReturnsError> {
    if confidence_suffix.is_empty() {
        return Err(ReturnsError::EmptyHorizon);
    }
    if confidence_suffix.iter().any(|c| !c.is_finite()) {
        return Err(ReturnsError::BadSegment("non-finite confidence".into()));
    }
    let max = confidence_suffix
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = confidence_suffix.iter().map(|&c| (c - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Full per-state weight matrix for a segment: row `j` is the softmax of the
/// confidences of bootstrap states `j..M`, zero-padded below the diagonal.
///
/// Renormalizing a masked global softmax over rows is algebraically the same
/// as taking the softmax of each surviving suffix, which is what this does.
pub fn build_weight_matrix(seg: &TrajectorySegment) -> Result<WeightMatrix, ReturnsError> {
    seg.validate()?;
    let m = seg.len();
    let mut rows = Vec::with_capacity(m);
    for j in 0..m {
        let suffix = confidence_weights(&seg.confidences[j..])?;
        let mut row = vec![0.0; m];
        row[j..].copy_from_slice(&suffix);
        rows.push(row);
    }
    Ok(WeightMatrix { rows })
}

/// All n-step returns of a segment, computed by the backward recursion
/// `G_j^(n) = r_j + gamma G_(j+1)^(n-1)`. `out[j][n-1]` holds the n-step
/// return for state `j`, `n = 1..=M-j`.
pub(crate) fn all_returns(seg: &TrajectorySegment) -> Vec<Vec<f64>> {
    let m = seg.len();
    let mut out: Vec<Vec<f64>> = vec![Vec::new(); m];
    for j in (0..m).rev() {
        let avail = m - j;
        let mut g = Vec::with_capacity(avail);
        g.push(seg.rewards[j] + seg.gamma * seg.boot_values[j]);
        for n in 2..=avail {
            let longer = seg.rewards[j] + seg.gamma * out[j + 1][n - 2];
            g.push(longer);
        }
        out[j] = g;
    }
    out
}

/// Mixture weights for the `M - j` returns available at state `j`.
pub(crate) fn mixture_weights(
    seg: &TrajectorySegment,
    cfg: &MixerConfig,
    j: usize,
) -> Result<Vec<f64>, ReturnsError> {
    let avail = seg.len() - j;
    match cfg.mode {
        MixerMode::NStep => {
            let mut w = vec![0.0; avail];
            w[avail - 1] = 1.0;
            Ok(w)
        }
        MixerMode::Lambda => lambda_weight_vector(avail, cfg.lambda.unwrap()),
        MixerMode::Car => confidence_weights(&seg.confidences[j..]),
    }
}

/// TD targets for every state of a segment under the configured mixer.
pub fn compute_targets(
    seg: &TrajectorySegment,
    cfg: &MixerConfig,
) -> Result<Vec<f64>, ReturnsError> {
    seg.validate()?;
    cfg.validate()?;
    let m = seg.len();
    if m > cfg.window {
        return Err(ReturnsError::WindowExceeded {
            m,
            window: cfg.window,
        });
    }
    let returns = all_returns(seg);
    let mut targets = Vec::with_capacity(m);
    for j in 0..m {
        let w = mixture_weights(seg, cfg, j)?;
        let mut t = 0.0;
        for (weight, g) in w.iter().zip(&returns[j]) {
            t += weight * g;
        }
        targets.push(t);
    }
    Ok(targets)
}

/// Brute-force reference for [`compute_targets`]: every n-step return is
/// materialized from its definition as a fresh discounted sum (no shared
/// recursion), weights are recomputed naively, and the mixture is applied
/// term by term. Only meant for tests and the acceptance suite.
pub fn oracle_targets(
    seg: &TrajectorySegment,
    cfg: &MixerConfig,
) -> Result<Vec<f64>, ReturnsError> {
    seg.validate()?;
    cfg.validate()?;
    let m = seg.len();
    if m > cfg.window {
        return Err(ReturnsError::WindowExceeded {
            m,
            window: cfg.window,
        });
    }
    let enumerated_return = |j: usize, n: usize| -> f64 {
        let mut acc = 0.0;
        for i in 1..=n {
            acc += seg.gamma.powi(i as i32 - 1) * seg.rewards[j + i - 1];
        }
        acc + seg.gamma.powi(n as i32) * seg.boot_values[j + n - 1]
    };
    let mut targets = Vec::with_capacity(m);
    for j in 0..m {
        let avail = m - j;
        let weights: Vec<f64> = match cfg.mode {
            MixerMode::NStep => {
                let mut w = vec![0.0; avail];
                w[avail - 1] = 1.0;
                w
            }
            MixerMode::Lambda => {
                let l = cfg.lambda.unwrap();
                (1..=avail)
                    .map(|n| {
                        if n < avail {
                            (1.0 - l) * l.powi(n as i32 - 1)
                        } else {
                            l.powi(n as i32 - 1)
                        }
                    })
                    .collect()
            }
            MixerMode::Car => {
                let exps: Vec<f64> = seg.confidences[j..].iter().map(|&c| c.exp()).collect();
                let sum: f64 = exps.iter().sum();
                exps.into_iter().map(|e| e / sum).collect()
            }
        };
        let mut t = 0.0;
        for (n, w) in (1..=avail).zip(&weights) {
            t += w * enumerated_return(j, n);
        }
        targets.push(t);
    }
    Ok(targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Segment with only the fields the target arithmetic needs.
    pub(crate) fn bare_segment(
        rewards: Vec<f64>,
        confidences: Vec<f64>,
        boot_values: Vec<f64>,
        terminal: bool,
        gamma: f64,
    ) -> TrajectorySegment {
        let bootstrap_value = *boot_values.last().unwrap();
        TrajectorySegment {
            observations: Vec::new(),
            actions: Vec::new(),
            rewards,
            confidences,
            boot_values,
            next_observations: Vec::new(),
            bootstrap_value,
            terminal,
            gamma,
        }
    }

    #[test]
    fn n_step_return_matches_hand_sum() {
        let seg = bare_segment(
            vec![1.0, 0.0, 2.0],
            vec![0.0; 3],
            vec![0.5, -0.25, 4.0],
            false,
            0.5,
        );
        // 1 + 0.5*0 + 0.25*2 + 0.125*4 = 2.0
        assert_eq!(n_step_return(&seg, 0, 3).unwrap(), 2.0);
        // one-step: r + gamma * boot
        assert_eq!(n_step_return(&seg, 1, 1).unwrap(), 0.0 + 0.5 * -0.25);
        assert!(matches!(
            n_step_return(&seg, 1, 3),
            Err(ReturnsError::LookaheadOutOfRange { .. })
        ));
    }

    #[test]
    fn n_step_zero_and_terminal_cases() {
        let seg = bare_segment(vec![0.0], vec![0.3], vec![0.0], false, 0.9);
        assert_eq!(n_step_return(&seg, 0, 1).unwrap(), 0.0);
        let term = bare_segment(vec![0.7, -0.2], vec![0.0, 0.0], vec![1.5, 0.0], true, 0.9);
        assert_eq!(n_step_return(&term, 1, 1).unwrap(), -0.2);
    }

    #[test]
    fn lambda_weights_hand_values() {
        let w = lambda_weight_vector(3, 0.5).unwrap();
        assert_eq!(w, vec![0.5, 0.25, 0.25]);
        assert_eq!(lambda_weight_vector(4, 0.0).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(lambda_weight_vector(4, 1.0).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(lambda_weight_vector(1, 0.37).unwrap(), vec![1.0]);
        assert!(matches!(
            lambda_weight_vector(3, 1.5),
            Err(ReturnsError::BadLambda(_))
        ));
        assert!(matches!(
            lambda_weight_vector(0, 0.5),
            Err(ReturnsError::EmptyHorizon)
        ));
    }

    #[test]
    fn confidence_weights_hand_values() {
        let w = confidence_weights(&[0.0, 0.0, 0.0]).unwrap();
        for x in &w {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let w = confidence_weights(&[0.0, 2.0f64.ln()]).unwrap();
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-15);
        // shift invariance
        let a = confidence_weights(&[0.1, 0.4, 0.7]).unwrap();
        let b = confidence_weights(&[100.1, 100.4, 100.7]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(confidence_weights(&[]).is_err());
    }

    #[test]
    fn weight_matrix_hand_rows() {
        let seg = bare_segment(
            vec![0.0; 3],
            vec![0.0, 0.0, 0.0],
            vec![0.0; 3],
            false,
            0.9,
        );
        let m = build_weight_matrix(&seg).unwrap();
        let third = 1.0 / 3.0;
        for (k, &w) in m.row(0).iter().enumerate() {
            assert!((w - third).abs() < 1e-15, "row 0 col {k}");
        }
        assert_eq!(m.row(1)[0], 0.0);
        assert!((m.row(1)[1] - 0.5).abs() < 1e-15);
        assert!((m.row(1)[2] - 0.5).abs() < 1e-15);
        assert_eq!(m.row(2)[..2], [0.0, 0.0]);
        assert_eq!(m.row(2)[2], 1.0);

        let seg = bare_segment(
            vec![0.0, 0.0],
            vec![0.0, 3.0f64.ln()],
            vec![0.0; 2],
            false,
            0.9,
        );
        let m = build_weight_matrix(&seg).unwrap();
        assert!((m.row(0)[0] - 0.25).abs() < 1e-15);
        assert!((m.row(0)[1] - 0.75).abs() < 1e-15);
        assert_eq!(m.row(1)[1], 1.0);

        let single = bare_segment(vec![0.2], vec![-4.0], vec![0.1], false, 0.5);
        let m = build_weight_matrix(&single).unwrap();
        assert_eq!(m.row(0), &[1.0]);
    }

    #[test]
    fn targets_nstep_hand_value() {
        let seg = bare_segment(
            vec![1.0, 0.0, 2.0],
            vec![0.0; 3],
            vec![9.0, 9.0, 4.0],
            false,
            0.5,
        );
        let t = compute_targets(&seg, &MixerConfig::nstep(20)).unwrap();
        assert_eq!(t[0], 2.0);
    }

    #[test]
    fn targets_lambda_zero_is_one_step_td() {
        let seg = bare_segment(
            vec![0.3, -1.0, 0.5, 2.0],
            vec![0.1, -0.2, 0.3, 0.0],
            vec![1.0, -0.5, 0.25, 0.0],
            true,
            0.9,
        );
        let t = compute_targets(&seg, &MixerConfig::lambda(0.0, 20)).unwrap();
        for j in 0..seg.len() {
            assert_eq!(t[j], seg.rewards[j] + 0.9 * seg.boot_values[j]);
        }
    }

    #[test]
    fn targets_car_uniform_reduces_to_average() {
        let seg = bare_segment(
            vec![0.5, 1.0, -0.25],
            vec![0.7, 0.7, 0.7],
            vec![0.2, 0.4, 0.8],
            false,
            0.95,
        );
        let t = compute_targets(&seg, &MixerConfig::car(20)).unwrap();
        for j in 0..3 {
            let avail = 3 - j;
            let mean: f64 = (1..=avail)
                .map(|n| n_step_return(&seg, j, n).unwrap())
                .sum::<f64>()
                / avail as f64;
            assert!((t[j] - mean).abs() < 1e-12, "state {j}");
        }
    }

    #[test]
    fn window_is_enforced() {
        let seg = bare_segment(vec![0.0; 5], vec![0.0; 5], vec![0.0; 5], false, 0.9);
        assert!(matches!(
            compute_targets(&seg, &MixerConfig::nstep(4)),
            Err(ReturnsError::WindowExceeded { m: 5, window: 4 })
        ));
    }

    #[test]
    fn oracle_matches_on_small_segment() {
        let seg = bare_segment(
            vec![0.1, 0.9, -0.4, 0.0],
            vec![0.5, -1.0, 0.2, 0.8],
            vec![-0.3, 0.6, 0.1, 0.7],
            false,
            0.99,
        );
        for cfg in [
            MixerConfig::nstep(20),
            MixerConfig::lambda(0.9, 20),
            MixerConfig::car(20),
        ] {
            let a = compute_targets(&seg, &cfg).unwrap();
            let b = oracle_targets(&seg, &cfg).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
        let single = bare_segment(vec![0.4], vec![0.0], vec![0.5], false, 0.9);
        let t = oracle_targets(&single, &MixerConfig::car(20)).unwrap();
        assert!((t[0] - (0.4 + 0.9 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn segment_validation_catches_bad_shapes() {
        let mut seg = bare_segment(vec![1.0, 2.0], vec![0.0, 0.0], vec![0.0, 0.5], false, 0.9);
        seg.terminal = true; // bootstrap 0.5 != 0
        assert!(seg.validate().is_err());
        let empty = TrajectorySegment {
            observations: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            confidences: Vec::new(),
            boot_values: Vec::new(),
            next_observations: Vec::new(),
            bootstrap_value: 0.0,
            terminal: false,
            gamma: 0.9,
        };
        assert!(empty.validate().is_err());
        let mut seg = bare_segment(vec![1.0], vec![0.0], vec![0.0], false, 0.9);
        seg.gamma = 1.0;
        assert!(seg.validate().is_err());
        let mut seg = bare_segment(vec![1.0], vec![0.0], vec![0.0], false, 0.9);
        seg.rewards[0] = f64::NAN;
        assert!(seg.validate().is_err());
    }
}
