use temple::env::{LandformMaze, TaskDistribution};
use temple::fmtemple::{cluster_models, penalize, FmTemple, FmTempleConfig};
use temple::learners::VisitLedger;
use temple::rng::{stream, Purpose};
use temple::session::{Horizon, MultiTaskLearner};
use temple::template::{gen_tt, RankingPermutation};

const HORIZON: Horizon = Horizon {
    episodes: 300,
    steps_per_episode: 30,
};

/// A ledger holding exactly `counts` at every listed pair, reward 0.
fn ledger(n_s: usize, n_a: usize, rows: &[(usize, usize, &[u64])]) -> VisitLedger {
    let mut l = VisitLedger::new(n_s, n_a);
    for &(s, a, counts) in rows {
        for (next, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                l.record(s, a, 0.0, next);
            }
        }
    }
    l
}

#[test]
fn initial_score_absorbs_spurious_mismatches() {
    // Two models that differ only at pair (1, 0).
    let a = ledger(3, 1, &[(0, 0, &[80, 20, 0]), (1, 0, &[0, 100, 0])]);
    let b = ledger(3, 1, &[(0, 0, &[80, 20, 0]), (1, 0, &[0, 60, 40])]);
    let clusters = cluster_models(&[a, b], 0.3, 50).unwrap();
    assert_eq!(clusters.len(), 2);

    let model_a = gen_tt(&[0, 100, 0], 0.0).unwrap();
    let noisy = gen_tt(&[30, 70, 0], 0.0).unwrap();
    let mut scores = vec![3.0, 3.0];
    // A noisy reading of (1, 0) that neither model explains.
    penalize(&mut scores, &clusters, (1, 0), (&noisy.0, &noisy.2), 0.15, 50);
    assert_eq!(scores, [2.0, 2.0]);
    // Two clean readings from model a.
    for _ in 0..2 {
        penalize(&mut scores, &clusters, (1, 0), (&model_a.0, &model_a.2), 0.15, 50);
    }
    assert_eq!(scores, [2.0, 0.0]);
    // Dead models are not penalised below zero.
    penalize(&mut scores, &clusters, (1, 0), (&noisy.0, &noisy.2), 0.15, 50);
    assert_eq!(scores, [1.0, 0.0]);

    // With a score of one the same noisy reading eliminates the true model.
    let mut fragile = vec![1.0, 1.0];
    penalize(&mut fragile, &clusters, (1, 0), (&noisy.0, &noisy.2), 0.15, 50);
    assert_eq!(fragile, [0.0, 0.0]);
}

#[test]
fn shared_pairs_and_unvisited_pairs_do_not_penalize() {
    let a = ledger(3, 1, &[(0, 0, &[80, 20, 0]), (1, 0, &[0, 100, 0])]);
    let b = ledger(3, 1, &[(0, 0, &[80, 20, 0]), (1, 0, &[0, 60, 40])]);
    let clusters = cluster_models(&[a, b], 0.3, 50).unwrap();
    let mut scores = vec![1.0, 1.0];
    let shared = gen_tt(&[79, 21, 0], 0.0).unwrap();
    penalize(&mut scores, &clusters, (0, 0), (&shared.0, &shared.2), 0.15, 50);
    // Pair (2, 0) was never visited by either model.
    let anything = gen_tt(&[0, 0, 9], 0.0).unwrap();
    penalize(&mut scores, &clusters, (2, 0), (&anything.0, &anything.2), 0.15, 50);
    assert_eq!(scores, [1.0, 1.0]);
    // A ranking that disagrees beyond the tie blocks counts as a mismatch.
    let flipped = RankingPermutation::from_rank_to_index(vec![1, 0, 2]).unwrap();
    penalize(&mut scores, &clusters, (0, 0), (&shared.0, &flipped), 0.15, 50);
    assert_eq!(scores, [0.0, 0.0]);
}

#[test]
fn single_model_is_identified_early() {
    let maze = TaskDistribution::landform(4, 4).sample(2, 0).unwrap();
    let task = maze.task(0.95).unwrap();
    let config = FmTempleConfig {
        phase1_tasks: 3,
        ..Default::default()
    };
    let mut fm = FmTemple::new(config);
    for i in 0..6 {
        let mut rng = stream(2, i, Purpose::Interaction);
        fm.run_task(&task, HORIZON, &mut rng).unwrap();
        if i >= 3 {
            assert_eq!(fm.clusters().unwrap().len(), 1);
            let report = fm.last_report().unwrap();
            let (cluster, step) = report.identified.expect("the only model is chosen");
            assert_eq!(cluster, 0);
            assert!(!report.fell_back);
            // The first identified pair already singles out the model.
            assert!(step <= 50 * 64, "identified at step {step}");
        }
    }
}

/// Goal cell of each of the first `n` two-goal tasks of a seed.
fn goals(seed: u64, n: usize) -> Vec<Option<usize>> {
    let dist = TaskDistribution::two_goal(4, 4);
    (0..n).map(|i| dist.sample(seed, i).unwrap().goal()).collect()
}

#[test]
fn two_goal_tasks_form_two_pure_clusters() {
    let dist = TaskDistribution::two_goal(4, 4);
    let mut exact = 0;
    for seed in 0..5 {
        let mut fm = FmTemple::new(FmTempleConfig::default());
        for i in 0..16 {
            let task = dist.sample(seed, i).unwrap().task(0.95).unwrap();
            let mut rng = stream(seed, i as u64, Purpose::Interaction);
            fm.run_task(&task, HORIZON, &mut rng).unwrap();
        }
        let g = goals(seed, 15);
        let clusters = fm.clusters().unwrap();
        // Never merge tasks of different goals.
        for c in clusters {
            let first = g[c.members()[0]];
            assert!(c.members().iter().all(|&m| g[m] == first), "seed {seed}: mixed cluster");
        }
        let distinct = g.iter().collect::<std::collections::BTreeSet<_>>().len();
        if clusters.len() == distinct {
            exact += 1;
        }
    }
    assert!(exact >= 4, "{exact}/5 seeds found exactly one cluster per goal");
}

#[test]
fn shape_mismatch_falls_back_to_online_learning() {
    let small = LandformMaze::uniform(3, 3, 0.2, true).unwrap().task(0.95).unwrap();
    let large = LandformMaze::uniform(4, 4, 0.2, true).unwrap().task(0.95).unwrap();
    let mut fm = FmTemple::new(FmTempleConfig {
        phase1_tasks: 1,
        ..Default::default()
    });
    let mut rng = stream(0, 0, Purpose::Interaction);
    fm.run_task(&small, HORIZON, &mut rng).unwrap();
    let m = fm.run_task(&large, HORIZON, &mut rng).unwrap();
    let report = fm.last_report().unwrap();
    assert_eq!(report.scores, [0.0]);
    assert!(report.identified.is_none());
    assert!(m.num_templates >= 1);
}
