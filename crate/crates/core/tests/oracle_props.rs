use logdet_ftrl::environment::{
    maxcut_payoff, pair_reduction, CutOutcome, LocalRound, LocalSpec, PayoffMatrix, Problem, RoundQuery,
};
use logdet_ftrl::oracles::{brute_force_opt, pseudodist_opt_desk, Transcript};
use logdet_ftrl::{lemmas, sampling, verify};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_transcript(n: usize, k: usize, rounds: usize, rng: &mut ChaCha8Rng) -> Transcript {
    let mut t = Transcript::new(n, k, Problem::Generic);
    for _ in 0..rounds {
        let q = RoundQuery {
            i: rng.random_range(0..n),
            j: rng.random_range(0..n),
        };
        let c = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..=1.0));
        t.push(q, PayoffMatrix::new(c).unwrap());
    }
    t
}

fn random_maxcut(n: usize, rounds: usize, rng: &mut ChaCha8Rng) -> Transcript {
    let mut t = Transcript::new(n, 2, Problem::MaxCut);
    for _ in 0..rounds {
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        let outcome = if rng.random_bool(0.5) { CutOutcome::Cut } else { CutOutcome::NotCut };
        t.push(RoundQuery { i, j }, maxcut_payoff(outcome, 2).unwrap());
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn brute_force_ignores_round_order(n in 1usize..=5, k in 2usize..=3, rounds in 0usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_transcript(n, k, rounds, &mut rng);
        let mut shuffled = t.clone();
        shuffled.rounds.shuffle(&mut rng);
        let a = brute_force_opt(&t).unwrap();
        let b = brute_force_opt(&shuffled).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-9);
        prop_assert!((t.labeling_payoff(&b.labels) - a.value).abs() <= 1e-9);
    }

    #[test]
    fn brute_force_beats_every_labeling(n in 1usize..=4, rounds in 0usize..30, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_transcript(n, 3, rounds, &mut rng);
        let best = brute_force_opt(&t).unwrap();
        for _ in 0..50 {
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            prop_assert!(t.labeling_payoff(&labels) <= best.value + 1e-9);
        }
    }
}

#[test]
fn relaxation_dominates_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..12 {
        let t = if case % 2 == 0 {
            random_maxcut(3, rng.random_range(1..30), &mut rng)
        } else {
            random_transcript(3, 2, rng.random_range(1..30), &mut rng)
        };
        let exact = brute_force_opt(&t).unwrap().value;
        let relaxed = pseudodist_opt_desk(&t).unwrap();
        assert!(relaxed >= exact - 1e-3, "case {case}: relaxed {relaxed} < labeling optimum {exact}");
    }
}

#[test]
fn tv_bound_stays_below_grid_integrated_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for pair in 0..200 {
        let s1 = sampling::random_spd(2, 0.2, 5.0, &mut rng);
        let s2 = sampling::random_spd(2, 0.2, 5.0, &mut rng);
        let (i, j) = [(0, 1), (0, 0), (1, 1)][pair % 3];
        let bound = lemmas::gaussian_tv_lower_bound(&s1, &s2, i, j).unwrap();
        let tv = lemmas::gaussian_tv_by_grid(&s1, &s2, verify::TV_GRID_WIDTH, 2000).unwrap();
        assert!(bound <= tv + verify::QUADRATURE_SLACK, "pair {pair}: bound {bound} above TV {tv}");
    }
}

#[test]
fn gaussian_maximizes_entropy_at_fixed_covariance() {
    let report = verify::gaussian_max_entropy_suite(50, 8).unwrap();
    assert!(report.passed(), "{report}");
}

#[test]
fn suites_pass_at_calibrated_constants() {
    let reports = [
        verify::entropy_suite(2000, 3, lemmas::ENTROPY_CONCAVITY_CONSTANT).unwrap(),
        verify::logdet_suite(2000, 3, lemmas::LOGDET_CONCAVITY_CONSTANT).unwrap(),
        verify::tv_suite(200, 3, 1.0).unwrap(),
        verify::regularizer_concavity_suite(200, 3).unwrap(),
    ];
    for report in reports {
        assert!(report.passed(), "{report}");
    }
}

/// A 3-local payoff that ignores its middle item agrees with the 2-local
/// payoff on the remaining two, for every labeling.
#[test]
fn pairing_reduction_matches_direct_evaluation_exhaustively() {
    let (n, k, r) = (4, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut rounds = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let payoff: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..=1.0)).collect();
                rounds.push(LocalRound { items: vec![a, b, c], payoff });
            }
        }
    }
    let spec = LocalSpec { n, k, r, rounds };
    let reduction = pair_reduction(r, &spec).unwrap();
    assert_eq!((reduction.spec.n, reduction.spec.k), (2, 4));
    for code in 0..(k.pow(n as u32)) {
        let labels: Vec<usize> = (0..n).map(|m| (code >> (n - 1 - m)) & 1).collect();
        let supers = reduction.encode(&labels);
        assert_eq!(reduction.decode(&supers), labels);
        for (round, reduced) in spec.rounds.iter().zip(&reduction.spec.script) {
            let direct = round.evaluate(&labels, k);
            let via = reduced.payoff.get(supers[reduced.query.i], supers[reduced.query.j]);
            assert_eq!(direct, via);
        }
    }
}
