//! Scoring functions h(.) and the temporal-decay term that together
//! produce a node's frontier priority.
//!
//! Scores are natural-log based throughout; probabilities are converted
//! at the model boundary. Decay is recomputed on read against the current
//! round, so stored node scores never mutate.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::types::Round;

/// The scoring-function family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ScoreMode {
    /// Sequence log-likelihood, unadjusted.
    Original,
    /// Log-likelihood divided by `depth^alpha`. `alpha = 0` is identical
    /// to [`ScoreMode::Original`]; `alpha = 1` averages per token.
    LengthAdjusted { alpha: f64 },
    /// Last-token conditional log-probability only; satisfies the Markov
    /// property and is insensitive to hypothesis length.
    Memoryless,
}

impl ScoreMode {
    /// Per-token average log-likelihood (`alpha = 1`).
    pub fn mean() -> Self {
        ScoreMode::LengthAdjusted { alpha: 1.0 }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if let ScoreMode::LengthAdjusted { alpha } = self {
            if !alpha.is_finite() || *alpha < 0.0 {
                return Err(CoreError::BadConfig(format!(
                    "length-adjusted alpha must be finite and >= 0, got {alpha}"
                )));
            }
        }
        Ok(())
    }
}

/// Weight and slope of the temporal-decay term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    /// Weight of the term; `0` disables decay exactly.
    pub kappa: f64,
    /// Exponent on the node age; must be positive.
    pub beta: f64,
}

pub const DEFAULT_BETA: f64 = 0.5;

/// The weight grid swept in the completion-rate experiments.
pub const KAPPA_SWEEP: [f64; 5] = [0.0, 0.01, 0.05, 0.1, 0.2];

impl DecayParams {
    pub fn new(kappa: f64) -> Self {
        DecayParams { kappa, beta: DEFAULT_BETA }
    }

    pub fn disabled() -> Self {
        Self::new(0.0)
    }

    pub fn is_disabled(&self) -> bool {
        self.kappa == 0.0
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if !self.kappa.is_finite() || self.kappa < 0.0 {
            return Err(CoreError::BadConfig(format!(
                "decay weight kappa must be finite and >= 0, got {}",
                self.kappa
            )));
        }
        if !self.beta.is_finite() || self.beta <= 0.0 {
            return Err(CoreError::BadConfig(format!(
                "decay exponent beta must be finite and > 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

impl Default for DecayParams {
    fn default() -> Self {
        Self::disabled()
    }
}

/// Evaluates h(.) for a hypothesis summarized by its cumulative
/// log-likelihood, depth, and last step log-probability.
///
/// Panics if `depth` is 0 under [`ScoreMode::LengthAdjusted`]; only the
/// root has depth 0 and the root is never scored.
pub fn model_score(mode: ScoreMode, cum_logprob: f64, depth: u32, step_logprob: f64) -> f64 {
    match mode {
        ScoreMode::Original => cum_logprob,
        ScoreMode::LengthAdjusted { alpha } => {
            assert!(depth >= 1, "length-adjusted scoring requires depth >= 1");
            cum_logprob / f64::from(depth).powf(alpha)
        }
        ScoreMode::Memoryless => step_logprob,
    }
}

/// The decay term `-kappa * (now - node_time)^beta`.
///
/// Always `<= 0`; strictly decreasing in the node age when `kappa > 0`.
/// Panics if `now < node_time`.
pub fn decay(node_time: Round, now: Round, params: &DecayParams) -> f64 {
    assert!(
        now >= node_time,
        "decay evaluated before discovery: now={now} < node_time={node_time}"
    );
    if params.kappa == 0.0 {
        return 0.0;
    }
    let age = (now - node_time) as f64;
    -params.kappa * age.powf(params.beta)
}

/// Frontier priority of a node at round `now`: model score plus decay.
/// With `kappa = 0` this equals the model score exactly.
pub fn adjusted_score(model_score: f64, node_time: Round, now: Round, params: &DecayParams) -> f64 {
    model_score + decay(node_time, now, params)
}

/// Experimental depth-proportional bonus considered as an alternative
/// completion incentive. Rewarding sheer length collapses the search into
/// a depth-first dive along whichever path happens to be longest, so this
/// stays off (`weight = 0`) outside ablations.
pub fn depth_bonus(depth: u32, weight: f64) -> f64 {
    weight * f64::from(depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memoryless_returns_the_step_logprob() {
        assert_eq!(model_score(ScoreMode::Memoryless, -3.2, 4, -0.7), -0.7);
    }

    #[test]
    fn length_adjusted_divides_by_depth_pow_alpha() {
        let got = model_score(ScoreMode::LengthAdjusted { alpha: 1.0 }, -4.0, 2, -1.0);
        assert_eq!(got, -2.0);
    }

    #[test]
    fn alpha_zero_matches_original() {
        let original = model_score(ScoreMode::Original, -4.0, 2, -1.0);
        let adjusted = model_score(ScoreMode::LengthAdjusted { alpha: 0.0 }, -4.0, 2, -1.0);
        assert_eq!(original, -4.0);
        assert_eq!(adjusted, -4.0);
    }

    #[test]
    #[should_panic(expected = "depth >= 1")]
    fn length_adjusted_rejects_depth_zero() {
        model_score(ScoreMode::LengthAdjusted { alpha: 1.0 }, 0.0, 0, 0.0);
    }

    #[test]
    fn decay_with_unit_parameters() {
        // with kappa = beta = 1, a node found at t=1 carries -4 at t=5
        // and a node found at t=4 carries -1
        let params = DecayParams { kappa: 1.0, beta: 1.0 };
        assert_eq!(decay(1, 5, &params), -4.0);
        assert_eq!(decay(4, 5, &params), -1.0);
    }

    #[test]
    fn decay_of_a_fresh_node_is_zero() {
        for params in [
            DecayParams { kappa: 1.0, beta: 1.0 },
            DecayParams::new(0.2),
            DecayParams::disabled(),
        ] {
            assert_eq!(decay(3, 3, &params), 0.0);
        }
    }

    #[test]
    fn decay_hand_example_sqrt() {
        let params = DecayParams { kappa: 0.1, beta: 0.5 };
        let got = decay(0, 4, &params);
        assert!((got - (-0.2)).abs() < 1e-12); // -0.1 * sqrt(4)
    }

    #[test]
    #[should_panic(expected = "before discovery")]
    fn decay_rejects_time_travel() {
        decay(5, 2, &DecayParams::new(0.1));
    }

    #[test]
    fn adjusted_score_adds_decay() {
        let params = DecayParams { kappa: 1.0, beta: 1.0 };
        assert_eq!(adjusted_score(-2.0, 0, 4, &params), -6.0);
    }

    #[test]
    fn disabled_decay_leaves_the_model_score_untouched() {
        let params = DecayParams::disabled();
        for age in [0, 1, 10, 1000] {
            assert_eq!(adjusted_score(-2.5, 0, age, &params), -2.5);
        }
    }

    #[test]
    fn younger_nodes_outrank_equal_scores_under_decay() {
        let params = DecayParams::new(0.1);
        let older = adjusted_score(-2.0, 1, 5, &params);
        let younger = adjusted_score(-2.0, 3, 5, &params);
        assert!(younger > older);
    }

    #[test]
    fn depth_bonus_is_linear_and_off_by_default() {
        assert_eq!(depth_bonus(7, 0.0), 0.0);
        assert_eq!(depth_bonus(7, 0.5), 3.5);
    }
}
