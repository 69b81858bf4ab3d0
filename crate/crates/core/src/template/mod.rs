//! Transition templates: state-action dynamics with the next-state
//! probabilities sorted into non-increasing order.
//!
//! Two state-action pairs that move to *different* states with the *same*
//! probability pattern share one template. For instance the dynamics
//! `[0.3, 0.7, 0.0]` and `[0.0, 0.3, 0.7]`, both with reward 1, map to the
//! template `([0.7, 0.3], 1)`. The ranking permutation remembers where each
//! rank came from, so pooled template statistics can be mapped back onto any
//! member pair.

mod library;
mod permutation;

pub use library::{TemplateLibrary, TtVisitRecord};
pub use permutation::RankingPermutation;

use crate::mdp::PROB_TOLERANCE;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TemplateError {
    #[error("cannot build a template from all-zero counts")]
    EmptyCounts,
    #[error("template probabilities must be non-increasing, non-negative and sum to 1")]
    NotATemplate,
    #[error("template reward {0} is outside [0, 1]")]
    BadReward(f64),
    #[error("template index {index} out of range for a library of {len}")]
    NoSuchTemplate { index: usize, len: usize },
    #[error("pooled counts have support {support} but the pair only has {len} next states")]
    LengthMismatch { support: usize, len: usize },
    #[error("template library line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A non-increasing probability vector paired with a reward in `[0, 1]`.
///
/// Trailing zeros are dropped on construction, so templates built from
/// different-sized state spaces compare directly.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTemplate {
    probs: Vec<f64>,
    reward: f64,
}

impl TransitionTemplate {
    pub fn new(mut probs: Vec<f64>, reward: f64) -> Result<Self, TemplateError> {
        let sum: f64 = probs.iter().sum();
        let ordered = probs.windows(2).all(|w| w[0] >= w[1]);
        if probs.is_empty()
            || !ordered
            || probs.iter().any(|p| *p < 0.0)
            || (sum - 1.0).abs() > PROB_TOLERANCE
        {
            return Err(TemplateError::NotATemplate);
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(TemplateError::BadReward(reward));
        }
        truncate_zeros(&mut probs);
        Ok(Self { probs, reward })
    }

    /// Template of a pooled record: counts normalised by their total.
    pub(crate) fn from_ordered_counts(counts: &[u64], reward_sum: f64) -> Result<Self, TemplateError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(TemplateError::EmptyCounts);
        }
        let n = total as f64;
        let mut probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        truncate_zeros(&mut probs);
        Ok(Self {
            probs,
            reward: (reward_sum / n).clamp(0.0, 1.0),
        })
    }

    /// The template of a known transition row.
    pub fn from_dynamics(probs: &[f64], reward: f64) -> Result<Self, TemplateError> {
        let mut sorted = probs.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        Self::new(sorted, reward)
    }

    /// Probability part, without trailing zeros.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn reward(&self) -> f64 {
        self.reward
    }

    /// Number of ranks with nonzero probability.
    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    /// Probability part zero-padded (or cut) to `len` entries.
    pub fn padded_probs(&self, len: usize) -> Vec<f64> {
        let mut v = self.probs.clone();
        v.resize(len, 0.0);
        v
    }
}

fn truncate_zeros(probs: &mut Vec<f64>) {
    while probs.len() > 1 && probs[probs.len() - 1] == 0.0 {
        probs.pop();
    }
}

/// Builds the template, pooled-count record and ranking permutation of a
/// visit-count vector `counts` with accumulated reward `reward_sum`.
pub fn gen_tt(
    counts: &[u64],
    reward_sum: f64,
) -> Result<(TransitionTemplate, TtVisitRecord, RankingPermutation), TemplateError> {
    if counts.iter().all(|&c| c == 0) {
        return Err(TemplateError::EmptyCounts);
    }
    let sigma = RankingPermutation::descending(counts);
    let record = TtVisitRecord::new(sigma.apply(counts), reward_sum);
    let template = TransitionTemplate::from_ordered_counts(record.ordered_counts(), reward_sum)?;
    Ok((template, record, sigma))
}

/// Distance between templates: l2 distance of the zero-padded probability
/// parts plus the absolute reward difference.
///
/// For rewards in `[0, 1]` and length-`n` probability parts this never
/// exceeds `sqrt((n - 1) / n) + 1 < 2`.
pub fn tt_distance(a: &TransitionTemplate, b: &TransitionTemplate) -> f64 {
    let len = a.probs.len().max(b.probs.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let squared: f64 = (0..len)
        .map(|i| {
            let d = at(&a.probs, i) - at(&b.probs, i);
            d * d
        })
        .sum();
    squared.sqrt() + (a.reward - b.reward).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gen_tt_sorts_and_normalises() {
        let (g, rec, sigma) = gen_tt(&[3, 7, 0], 10.0).unwrap();
        assert_eq!(g.probs(), &[0.7, 0.3]);
        assert_eq!(g.padded_probs(3), vec![0.7, 0.3, 0.0]);
        assert_eq!(g.reward(), 1.0);
        assert_eq!(rec.ordered_counts(), &[7, 3, 0]);
        assert_eq!(rec.reward_sum(), 10.0);
        assert_eq!(sigma.rank_to_index(), &[1, 0, 2]);
    }

    #[test]
    fn gen_tt_identity_and_ties() {
        let (_, _, sigma) = gen_tt(&[5, 3, 2], 0.0).unwrap();
        assert_eq!(sigma, RankingPermutation::identity(3));
        let (_, _, sigma) = gen_tt(&[4, 4, 2], 1.0).unwrap();
        assert_eq!(sigma.rank_to_index(), &[0, 1, 2]);
    }

    #[test]
    fn gen_tt_rejects_zero_counts() {
        assert_eq!(gen_tt(&[0, 0, 0], 0.0).unwrap_err(), TemplateError::EmptyCounts);
    }

    #[test]
    fn permuting_back_reproduces_empirical_row() {
        let counts = [3u64, 7, 0, 5];
        let (g, _, sigma) = gen_tt(&counts, 2.0).unwrap();
        let back = sigma.apply_inverse(&g.padded_probs(counts.len())).unwrap();
        let total: u64 = counts.iter().sum();
        for (b, c) in back.iter().zip(counts) {
            assert_eq!(*b, c as f64 / total as f64);
        }
    }

    #[test]
    fn same_template_for_permuted_dynamics() {
        let a = TransitionTemplate::from_dynamics(&[0.3, 0.7, 0.0], 1.0).unwrap();
        let b = TransitionTemplate::from_dynamics(&[0.0, 0.3, 0.7], 1.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.probs(), &[0.7, 0.3]);
    }

    #[test]
    fn template_validation() {
        assert_eq!(
            TransitionTemplate::new(vec![0.3, 0.7], 0.0).unwrap_err(),
            TemplateError::NotATemplate
        );
        assert_eq!(
            TransitionTemplate::new(vec![0.7, 0.2], 0.0).unwrap_err(),
            TemplateError::NotATemplate
        );
        assert_eq!(
            TransitionTemplate::new(vec![1.0], 1.5).unwrap_err(),
            TemplateError::BadReward(1.5)
        );
        let g = TransitionTemplate::new(vec![1.0, 0.0, 0.0], 0.0).unwrap();
        assert_eq!(g.support_len(), 1);
    }

    #[test]
    fn distance_between_ice_templates() {
        let g1 = TransitionTemplate::new(vec![0.8, 0.2, 0.0, 0.0], 0.0).unwrap();
        let g2 = TransitionTemplate::new(vec![0.6, 0.2, 0.2, 0.0], 0.0).unwrap();
        assert_relative_eq!(tt_distance(&g1, &g2), 0.08f64.sqrt(), epsilon = 1e-12);
        assert!((tt_distance(&g1, &g2) - 0.2828).abs() < 1e-4);
        assert_eq!(tt_distance(&g1, &g1), 0.0);
    }

    #[test]
    fn distance_extreme_pair_with_reward_gap() {
        let n = 4;
        let a = TransitionTemplate::new(vec![1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let b = TransitionTemplate::new(vec![1.0 / n as f64; n], 1.0).unwrap();
        assert_relative_eq!(tt_distance(&a, &b), 0.75f64.sqrt() + 1.0, epsilon = 1e-12);
    }
}
