mod common;

use common::l2;
use proptest::prelude::*;
use temple::template::{gen_tt, tt_distance, RankingPermutation, TemplateLibrary, TransitionTemplate, TtVisitRecord};

fn counts() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..40, 1..12).prop_filter("some visits", |c| c.iter().any(|&x| x > 0))
}

fn template() -> impl Strategy<Value = TransitionTemplate> {
    (prop::collection::vec(0.0f64..1.0, 1..10), 0.0f64..=1.0).prop_filter_map("positive mass", |(w, r)| {
        let total: f64 = w.iter().sum();
        (total > 1e-6).then(|| TransitionTemplate::from_dynamics(&w.iter().map(|x| x / total).collect::<Vec<_>>(), r).unwrap())
    })
}

/// A probability vector of length `n`, drawn from normalised weights with
/// some exact zeros.
fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..1.0], n).prop_map(move |mut w| {
        if w.iter().all(|&x| x == 0.0) {
            w[0] = 1.0;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        w
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn permutation_round_trips(c in counts()) {
        let sigma = RankingPermutation::descending(&c);
        let ranked = sigma.apply(&c);
        prop_assert!(ranked.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(sigma.apply_inverse(&ranked).unwrap(), c.clone());
        let v: Vec<u64> = (0..c.len() as u64).collect();
        prop_assert_eq!(sigma.apply(&sigma.apply_inverse(&v).unwrap()), v);
        // Stability: equal counts keep their index order.
        for w in sigma.rank_to_index().windows(2) {
            if c[w[0]] == c[w[1]] {
                prop_assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn gen_tt_matches_hand_normalisation(c in counts(), r in 0.0f64..1.0) {
        let total: u64 = c.iter().sum();
        let reward_sum = r * total as f64;
        let (g, record, sigma) = gen_tt(&c, reward_sum).unwrap();
        let mut sorted = c.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        prop_assert_eq!(record.ordered_counts(), &sorted[..]);
        let expected: Vec<f64> = sorted.iter().map(|&x| x as f64 / total as f64).collect();
        prop_assert!(l2(g.probs(), &expected) < 1e-12);
        prop_assert!((g.reward() - r).abs() < 1e-12);
        prop_assert!((g.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(g.probs().last().is_some_and(|&p| p > 0.0), "trailing zeros are truncated");
        // Back in state order the template is the empirical distribution.
        let state = sigma.apply_inverse(g.probs()).unwrap();
        let empirical: Vec<f64> = c.iter().map(|&x| x as f64 / total as f64).collect();
        prop_assert!(l2(&state, &empirical) < 1e-12);
    }

    #[test]
    fn gen_tt_is_scale_invariant(c in counts(), r in 0.0f64..1.0, k in 1u64..50) {
        let total = c.iter().sum::<u64>() as f64;
        let scaled: Vec<u64> = c.iter().map(|&x| x * k).collect();
        let (g1, _, s1) = gen_tt(&c, r * total).unwrap();
        let (gk, _, sk) = gen_tt(&scaled, r * total * k as f64).unwrap();
        prop_assert_eq!(g1.probs(), gk.probs());
        prop_assert!((g1.reward() - gk.reward()).abs() < 1e-12);
        prop_assert_eq!(s1, sk);
    }

    #[test]
    fn distance_is_a_metric(a in template(), b in template(), c in template()) {
        let ab = tt_distance(&a, &b);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, tt_distance(&b, &a));
        prop_assert_eq!(tt_distance(&a, &a), 0.0);
        prop_assert!(tt_distance(&a, &c) <= ab + tt_distance(&b, &c) + 1e-12);
        if ab == 0.0 {
            prop_assert!(l2(a.probs(), b.probs()) == 0.0 && a.reward() == b.reward());
        }
        let n = a.probs().len().max(b.probs().len()) as f64;
        prop_assert!(ab <= ((n - 1.0) / n).sqrt() + 1.0 + 1e-12);
    }

    #[test]
    fn distance_matches_padded_oracle(a in template(), b in template()) {
        let expected = l2(a.probs(), b.probs()) + (a.reward() - b.reward()).abs();
        prop_assert!((tt_distance(&a, &b) - expected).abs() < 1e-12);
    }

    #[test]
    fn library_conserves_counts(updates in prop::collection::vec((counts(), 0.0f64..5.0), 1..8)) {
        let mut lib = TemplateLibrary::new();
        let (g, record, _) = gen_tt(&updates[0].0, updates[0].1).unwrap();
        let idx = lib.insert(g, record);
        let mut total: u64 = updates[0].0.iter().sum();
        let mut reward = updates[0].1;
        for (c, r) in &updates[1..] {
            lib.tt_update(idx, c, *r).unwrap();
            total += c.iter().sum::<u64>();
            reward += r;
        }
        let rec = lib.record(idx).unwrap();
        prop_assert_eq!(rec.total(), total);
        prop_assert!((rec.reward_sum() - reward).abs() < 1e-9);
        prop_assert!(rec.ordered_counts().windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(lib.total_pooled(), total);
        // Augmenting through any permutation hands back the same totals.
        let len = rec.ordered_counts().len().max(12);
        let sigma = RankingPermutation::descending(&(0..len as u64).collect::<Vec<_>>());
        let (aug, aug_r) = lib.augment(idx, &sigma).unwrap();
        prop_assert_eq!(aug.iter().sum::<u64>(), total);
        prop_assert_eq!(aug_r, rec.reward_sum());
    }

    #[test]
    fn augment_recovers_count_pattern(c in counts(), r in 0.0f64..3.0) {
        let mut lib = TemplateLibrary::new();
        let (g, record, sigma) = gen_tt(&c, r).unwrap();
        let idx = lib.insert(g, record);
        let (aug, aug_r) = lib.augment(idx, &sigma).unwrap();
        prop_assert_eq!(aug, c);
        prop_assert_eq!(aug_r, r);
    }

    #[test]
    fn insertion_keeps_separation(cands in prop::collection::vec(template(), 1..30), gap in 0.01f64..0.8) {
        let mut lib = TemplateLibrary::new();
        for g in cands {
            match lib.find_closest(&g, gap) {
                Some(i) => {
                    prop_assert!(tt_distance(&g, lib.template(i).unwrap()) < gap);
                    // Closest really is closest.
                    for t in lib.templates() {
                        prop_assert!(tt_distance(&g, lib.template(i).unwrap()) <= tt_distance(&g, t));
                    }
                }
                None => {
                    for t in lib.templates() {
                        prop_assert!(tt_distance(&g, t) >= gap);
                    }
                    let record = TtVisitRecord::new(vec![1], 0.0);
                    lib.insert(g, record);
                }
            }
        }
    }

    #[test]
    fn text_round_trip(cs in prop::collection::vec((counts(), 0.0f64..4.0), 1..6)) {
        let mut lib = TemplateLibrary::new();
        for (c, r) in cs {
            let (g, record, _) = gen_tt(&c, r).unwrap();
            lib.insert(g, record);
        }
        let back = TemplateLibrary::from_text(&lib.to_text()).unwrap();
        // Trailing zero counts are not written; they carry no information.
        let trim = |r: &TtVisitRecord| {
            let c = r.ordered_counts();
            let end = c.iter().rposition(|&x| x > 0).map_or(0, |i| i + 1);
            (c[..end].to_vec(), r.reward_sum())
        };
        prop_assert_eq!(back.len(), lib.len());
        for (a, b) in back.records().iter().zip(lib.records()) {
            prop_assert_eq!(trim(a), trim(b));
        }
        for (a, b) in back.templates().iter().zip(lib.templates()) {
            prop_assert!(tt_distance(a, b) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    /// Squared l2 distance between two distributions of length n never
    /// exceeds (n - 1) / n.
    #[test]
    fn probability_part_distance_bound((n, a, b) in (2usize..=50).prop_flat_map(|n| (Just(n), distribution(n), distribution(n)))) {
        let ga = TransitionTemplate::from_dynamics(&a, 0.5).unwrap();
        let gb = TransitionTemplate::from_dynamics(&b, 0.5).unwrap();
        let d = tt_distance(&ga, &gb);
        prop_assert!(d * d <= (n as f64 - 1.0) / n as f64 + 1e-12);
    }
}

#[test]
fn distance_bound_is_attained() {
    for n in 2..=50 {
        let mut point = vec![0.0; n];
        point[0] = 1.0;
        let a = TransitionTemplate::new(point, 0.0).unwrap();
        let b = TransitionTemplate::new(vec![1.0 / n as f64; n], 0.0).unwrap();
        let d = tt_distance(&a, &b);
        let bound = (n as f64 - 1.0) / n as f64;
        assert!((d * d - bound).abs() < 1e-12, "n = {n}");
    }
    let a = TransitionTemplate::new(vec![1.0], 0.0).unwrap();
    let b = TransitionTemplate::new(vec![0.25; 4], 1.0).unwrap();
    assert!((tt_distance(&a, &b) - (0.75f64.sqrt() + 1.0)).abs() < 1e-12);
}

#[test]
fn worked_examples() {
    let (g, record, sigma) = gen_tt(&[3, 7, 0], 10.0).unwrap();
    assert_eq!(g.probs(), &[0.7, 0.3]);
    assert_eq!(g.reward(), 1.0);
    assert_eq!(record.ordered_counts(), &[7, 3, 0]);
    assert_eq!(sigma.rank_to_index(), &[1, 0, 2]);
    assert_eq!(gen_tt(&[5, 3, 2], 0.0).unwrap().2, RankingPermutation::identity(3));
    assert_eq!(gen_tt(&[4, 4, 2], 1.0).unwrap().2.rank_to_index(), &[0, 1, 2]);
    assert!(gen_tt(&[0, 0], 0.0).is_err());

    let mut lib = TemplateLibrary::new();
    let idx = lib.insert(g, record);
    lib.tt_update(idx, &[0, 2, 8], 10.0).unwrap();
    assert_eq!(lib.record(idx).unwrap().ordered_counts(), &[15, 5, 0]);
    assert_eq!(lib.template(idx).unwrap().probs(), &[0.75, 0.25]);
    assert_eq!(lib.template(idx).unwrap().reward(), 1.0);
    let before = lib.clone();
    lib.tt_update(idx, &[0, 0, 0], 0.0).unwrap();
    assert_eq!(lib, before);
    assert_eq!(lib.augment(idx, &sigma).unwrap(), (vec![5, 15, 0], 20.0));
    assert_eq!(
        lib.augment(idx, &RankingPermutation::identity(3)).unwrap(),
        (vec![15, 5, 0], 20.0)
    );

    let mut repeated = TemplateLibrary::new();
    let (g, record, _) = gen_tt(&[2, 5, 1], 3.0).unwrap();
    let single = g.clone();
    let i = repeated.insert(g, record);
    for _ in 0..9 {
        repeated.tt_update(i, &[2, 5, 1], 3.0).unwrap();
    }
    assert!(tt_distance(repeated.template(i).unwrap(), &single) < 1e-12);
}

#[test]
fn closest_template_lookup() {
    let g1 = TransitionTemplate::new(vec![0.8, 0.2], 0.0).unwrap();
    let g2 = TransitionTemplate::new(vec![0.6, 0.2, 0.2], 0.0).unwrap();
    let mut lib = TemplateLibrary::new();
    assert_eq!(lib.find_closest(&g1, 0.15), None);
    lib.insert(g1.clone(), TtVisitRecord::new(vec![8, 2], 0.0));
    lib.insert(g2, TtVisitRecord::new(vec![6, 2, 2], 0.0));
    let noisy = TransitionTemplate::new(vec![0.76, 0.21, 0.03], 0.0).unwrap();
    let d = tt_distance(&noisy, &g1);
    assert!(d < 0.06, "perturbation is small: {d}");
    assert_eq!(lib.find_closest(&noisy, 0.15), Some(0));
    assert_eq!(lib.find_closest(&noisy, 0.01), None);
    // Equidistant candidates go to the earlier template.
    let mut twins = TemplateLibrary::new();
    twins.insert(g1.clone(), TtVisitRecord::new(vec![8, 2], 0.0));
    twins.insert(g1.clone(), TtVisitRecord::new(vec![8, 2], 0.0));
    assert_eq!(twins.find_closest(&g1, 0.1), Some(0));
}
