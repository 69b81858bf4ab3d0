//! How many samples does template pooling save when any state-action pair
//! can be sampled directly?
//!
//! Conventional estimation samples each pair until every estimated row is
//! within `accuracy` (l2) of the truth, jointly with the target confidence.
//! Augmented estimation first samples each pair `m_id` times to identify its
//! template, then spends `K` more samples per template, spread over the
//! template's member pairs and pooled through each pair's frozen ranking.
//! The confidence budget is split evenly between the two stages.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::env::LandformMaze;
use crate::rng::{stream, Purpose};
use crate::template::{gen_tt, tt_distance, RankingPermutation, TemplateLibrary};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SavingsConfig {
    pub width: usize,
    pub height: usize,
    pub slip: f64,
    pub accuracy: f64,
    pub confidence: f64,
    pub user_gap: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SavingsConfig {
    fn default() -> Self {
        Self {
            width: 5,
            height: 5,
            slip: 0.4,
            accuracy: 0.01,
            confidence: 0.95,
            user_gap: 0.15,
            trials: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SavingsReport {
    pub num_pairs: usize,
    pub num_templates: usize,
    pub conventional_per_pair: u64,
    pub conventional_total: u64,
    pub identification_per_pair: u64,
    pub estimation_per_template: u64,
    pub augmented_total: u64,
    pub ratio: f64,
    /// Order-of-magnitude sample bounds `(1 / eps^2) ln(1 / delta)` for the
    /// same three quantities.
    pub bound_conventional: f64,
    pub bound_identification: f64,
    pub bound_estimation: f64,
}

/// A pair's true next-state distribution on its support only.
struct Pair {
    probs: Vec<f64>,
    support: Vec<usize>,
    group: usize,
}

impl Pair {
    fn sample<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0; self.probs.len()];
        let (mut left, mut mass) = (n, 1.0);
        for (k, &j) in self.support.iter().enumerate() {
            let p = self.probs[j];
            let c = if k + 1 == self.support.len() {
                left
            } else {
                let q = (p / mass).clamp(0.0, 1.0);
                Binomial::new(left, q).expect("valid binomial").sample(rng)
            };
            counts[j] = c;
            left -= c;
            mass -= p;
        }
        counts
    }

    fn error(&self, estimate: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(estimate)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

fn pairs_of(maze: &LandformMaze) -> (Vec<Pair>, usize) {
    let truth = maze.ground_truth_templates();
    let mut pairs = Vec::new();
    for s in 0..maze.num_cells() {
        for a in 0..maze.actions().len() {
            let (probs, _) = maze.dynamics(s, a);
            let g = maze.template_of(s, a);
            let group = truth
                .iter()
                .position(|h| tt_distance(h, &g) < 1e-9)
                .expect("every template is in the ground truth");
            let support = (0..probs.len()).filter(|&j| probs[j] > 0.0).collect();
            pairs.push(Pair { probs, support, group });
        }
    }
    (pairs, truth.len())
}

/// Smallest `n >= lo` with `pass(n)`, assuming `pass` is (noisily) monotone.
fn minimal(lo: u64, mut pass: impl FnMut(u64) -> bool) -> u64 {
    if pass(lo) {
        return lo;
    }
    let (mut bad, mut good) = (lo, lo.max(1) * 2);
    while !pass(good) {
        bad = good;
        good *= 2;
        assert!(good < 1 << 40, "sample search diverged");
    }
    while good - bad > (good / 50).max(1) {
        let mid = bad + (good - bad) / 2;
        if pass(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

fn success_rate(config: &SavingsConfig, stage: u64, n: u64, mut trial: impl FnMut(&mut ChaCha8Rng) -> bool) -> f64 {
    let mut rng = stream(config.seed, (stage << 40) | n, Purpose::Savings);
    let ok = (0..config.trials).filter(|_| trial(&mut rng)).count();
    ok as f64 / config.trials as f64
}

fn conventional_trial(pairs: &[Pair], k: u64, accuracy: f64, rng: &mut ChaCha8Rng) -> bool {
    pairs.iter().all(|pair| {
        let counts = pair.sample(k, rng);
        let est: Vec<f64> = counts.iter().map(|&c| c as f64 / k as f64).collect();
        pair.error(&est) <= accuracy
    })
}

fn identification_trial(pairs: &[Pair], groups: usize, m: u64, gap: f64, rng: &mut ChaCha8Rng) -> bool {
    let mut library = TemplateLibrary::new();
    let mut assigned = vec![None; groups];
    for pair in pairs {
        let counts = pair.sample(m, rng);
        let (g, record, _) = gen_tt(&counts, 0.0).expect("m is positive");
        let index = match library.find_closest(&g, gap) {
            Some(i) => {
                library.tt_update(i, &counts, 0.0).expect("index is valid");
                i
            }
            None => library.insert(g, record),
        };
        match assigned[pair.group] {
            None => assigned[pair.group] = Some(index),
            Some(i) if i == index => {}
            Some(_) => return false,
        }
    }
    library.len() == groups
}

fn estimation_trial(pairs: &[Pair], groups: usize, m: u64, k: u64, accuracy: f64, rng: &mut ChaCha8Rng) -> bool {
    let sigmas: Vec<(RankingPermutation, Vec<u64>)> = pairs
        .iter()
        .map(|pair| {
            let counts = pair.sample(m, rng);
            (RankingPermutation::descending(&counts), counts)
        })
        .collect();
    let n = pairs.first().map_or(0, |p| p.probs.len());
    let mut pooled = vec![vec![0u64; n]; groups];
    for g in 0..groups {
        let members: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].group == g).collect();
        let size = members.len() as u64;
        for (rank, &i) in members.iter().enumerate() {
            let (sigma, id_counts) = &sigmas[i];
            let counts = if k == 0 {
                // Without extra samples the identification samples are all
                // there is; they are sorted and so biased at tied ranks.
                id_counts.clone()
            } else {
                let share = k / size + u64::from((rank as u64) < k % size);
                pairs[i].sample(share, rng)
            };
            for (slot, c) in pooled[g].iter_mut().zip(sigma.apply(&counts)) {
                *slot += c;
            }
        }
    }
    pairs.iter().zip(&sigmas).all(|(pair, (sigma, _))| {
        let pool = &pooled[pair.group];
        let total: u64 = pool.iter().sum();
        let ranked: Vec<f64> = pool.iter().map(|&c| c as f64 / total as f64).collect();
        let est = sigma.apply_inverse(&ranked).expect("lengths agree");
        pair.error(&est) <= accuracy
    })
}

pub fn estimate_savings_demo(config: &SavingsConfig) -> Result<SavingsReport, HarnessError> {
    let maze = LandformMaze::uniform(config.width, config.height, config.slip, false)?;
    let (pairs, groups) = pairs_of(&maze);
    let half = (1.0 + config.confidence) / 2.0;
    let acc = config.accuracy;

    let conventional = minimal(1, |k| {
        success_rate(config, 0, k, |rng| conventional_trial(&pairs, k, acc, rng)) >= config.confidence
    });
    let identification = minimal(1, |m| {
        success_rate(config, 1, m, |rng| identification_trial(&pairs, groups, m, config.user_gap, rng)) >= half
    });
    let estimation = minimal(0, |k| {
        success_rate(config, 2, k, |rng| estimation_trial(&pairs, groups, identification, k, acc, rng)) >= half
    });

    let n_pairs = pairs.len() as u64;
    let conventional_total = n_pairs * conventional;
    let augmented_total = n_pairs * identification + groups as u64 * estimation;
    let delta = 1.0 - config.confidence;
    let n = n_pairs as f64;
    let truth = maze.ground_truth_templates();
    let min_gap = truth
        .iter()
        .enumerate()
        .flat_map(|(i, a)| truth[i + 1..].iter().map(move |b| tt_distance(a, b)))
        .fold(f64::INFINITY, f64::min);
    Ok(SavingsReport {
        num_pairs: pairs.len(),
        num_templates: groups,
        conventional_per_pair: conventional,
        conventional_total,
        identification_per_pair: identification,
        estimation_per_template: estimation,
        augmented_total,
        ratio: augmented_total as f64 / conventional_total as f64,
        bound_conventional: n / (acc * acc) * (n / delta).ln(),
        bound_identification: if min_gap.is_finite() {
            n / (min_gap * min_gap) * (n / (delta / 2.0)).ln()
        } else {
            0.0
        },
        bound_estimation: groups as f64 / (acc * acc) * (groups as f64 / (delta / 2.0)).ln(),
    })
}
