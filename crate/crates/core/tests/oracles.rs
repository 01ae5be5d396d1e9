use online_hmm::dirichlet::{log_moment, solve_digamma_system, DigammaSystem, DirichletParams, MonomialExponents, SolverOptions};
use online_hmm::harness::random_teacher;
use online_hmm::hmm::{
    all_sequences, brute_force_likelihood, forward_backward, kl_divergence, sample_sequence, sequence_distribution,
    sequence_likelihood, sequence_likelihood_with, Scaling, DEFAULT_ENUMERATION_CAP,
};
use online_hmm::learners::{bw_reestimate, Learner, LearnerConfig, LearnerKind, OnlineLearner};
use online_hmm::special::{digamma, inverse_digamma};
use online_hmm::{HmmParams, ModelDims, ObservedSequence};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

fn model(n: usize, m: usize, t: usize, seed: u64) -> HmmParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_teacher(ModelDims::new(n, m, t).unwrap(), &mut rng)
}

fn sequence(m: usize, t: usize, rng: &mut impl Rng) -> ObservedSequence {
    ObservedSequence::new((0..t).map(|_| rng.random_range(0..m)).collect())
}

fn dims_strategy() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=3, 1usize..=4, 1usize..=5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn forward_matches_enumeration((n, m, t) in dims_strategy(), seed in any::<u64>()) {
        let p = model(n, m, t, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let y = sequence(m, t, &mut rng);
        let fwd = sequence_likelihood(&p, &y).unwrap();
        let brute = brute_force_likelihood(&p, &y, DEFAULT_ENUMERATION_CAP).unwrap();
        prop_assert!((fwd - brute).abs() <= 1e-12 * brute.max(f64::MIN_POSITIVE));
        let unscaled = sequence_likelihood_with(&p, &y, Scaling::Unscaled).unwrap();
        prop_assert!((unscaled - brute).abs() <= 1e-12 * brute.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn sequence_distribution_is_normalized((n, m, t) in dims_strategy(), seed in any::<u64>()) {
        let p = model(n, m, t, seed);
        let total: f64 = sequence_distribution(&p, DEFAULT_ENUMERATION_CAP).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn posterior_marginals_are_consistent((n, m, t) in dims_strategy(), seed in any::<u64>()) {
        let p = model(n, m, t, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let y = sample_sequence(&p, &mut rng);
        let post = forward_backward(&p, &y).unwrap();
        for s in 0..t {
            let sum: f64 = post.gamma_row(s).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
        for s in 0..t.saturating_sub(1) {
            for i in 0..n {
                let out: f64 = (0..n).map(|j| post.xi(s, i, j)).sum();
                prop_assert!((out - post.gamma(s, i)).abs() < 1e-12);
                let into: f64 = (0..n).map(|j| post.xi(s, j, i)).sum();
                prop_assert!((into - post.gamma(s + 1, i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_diagonal((n, m, t) in dims_strategy(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = model(n, m, t, s1);
        let b = model(n, m, t, s2);
        prop_assert!(kl_divergence(&a, &a).unwrap().abs() < 1e-12);
        prop_assert!(kl_divergence(&a, &b).unwrap() >= 0.0);
    }

    #[test]
    fn baum_welch_never_lowers_likelihood((n, m, t) in dims_strategy(), seed in any::<u64>()) {
        let p = model(n, m, t, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let y = sample_sequence(&p, &mut rng);
        let before = sequence_likelihood(&p, &y).unwrap();
        let next = bw_reestimate(&p, &y).unwrap();
        prop_assert!(next.validate().is_ok());
        prop_assert!(sequence_likelihood(&next, &y).unwrap() >= before * (1.0 - 1e-12));
    }

    #[test]
    fn inverse_digamma_inverts(x in 1e-3f64..1e4) {
        let back = inverse_digamma(digamma(x));
        prop_assert!((back - x).abs() <= 1e-10 * x);
    }

    #[test]
    fn inverse_digamma_is_increasing(y in -50.0f64..20.0, dy in 1e-6f64..1.0) {
        prop_assert!(inverse_digamma(y + dy) > inverse_digamma(y));
    }

    #[test]
    fn solver_recovers_hyperparameters(u in prop::collection::vec(0.1f64..50.0, 2..=6)) {
        let target = DirichletParams::new(u.clone()).unwrap();
        let x = solve_digamma_system(&DigammaSystem::from_dirichlet(&target), &SolverOptions::default()).unwrap();
        for (a, b) in x.iter().zip(&u) {
            prop_assert!((a - b).abs() <= 1e-8 * b);
        }
    }

    #[test]
    fn learners_stay_on_the_simplex(kind in 0usize..4, seed in any::<u64>(), steps in 1usize..30) {
        let dims = ModelDims::new(2, 3, 2).unwrap();
        let teacher = model(2, 3, 2, seed);
        let mut learner = Learner::symmetric(&LearnerConfig::new(LearnerKind::ALL[kind]), dims).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        for _ in 0..steps {
            learner.observe(&sample_sequence(&teacher, &mut rng)).unwrap();
            let est = learner.estimate();
            prop_assert!(est.validate().is_ok(), "{}", est.validate());
        }
    }
}

#[test]
fn sampler_matches_exact_distribution() {
    let p = model(2, 3, 2, 17);
    let exact = sequence_distribution(&p, DEFAULT_ENUMERATION_CAP).unwrap();
    let index: Vec<ObservedSequence> = all_sequences(p.dims(), DEFAULT_ENUMERATION_CAP).unwrap().collect();
    let draws = 200_000;
    let mut counts = vec![0usize; exact.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..draws {
        let y = sample_sequence(&p, &mut rng);
        counts[index.iter().position(|s| *s == y).unwrap()] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&exact)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&c, &e)| {
            let expected = e * draws as f64;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    // 8 degrees of freedom; the 0.999 quantile is 26.1.
    assert!(chi2 < 26.1, "chi2 = {chi2}");
}

#[test]
fn log_moment_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = [1.5, 0.7, 3.0];
    let r = [1.0, 0.0, 2.0];
    let gammas: Vec<Gamma<f64>> = u.iter().map(|&a| Gamma::new(a, 1.0).unwrap()).collect();
    let draws = 200_000;
    for i in 0..3 {
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..draws {
            let g: Vec<f64> = gammas.iter().map(|d| d.sample(&mut rng)).collect();
            let total: f64 = g.iter().sum();
            let x: Vec<f64> = g.iter().map(|v| v / total).collect();
            let f = x.iter().zip(&r).map(|(xi, ri)| xi.powf(*ri)).product::<f64>() * x[i].ln();
            sum += f;
            sum2 += f * f;
        }
        let mean = sum / draws as f64;
        let se = ((sum2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        let exact = log_moment(
            &DirichletParams::new(u.to_vec()).unwrap(),
            &MonomialExponents::new(r.to_vec()).unwrap(),
            i,
        )
        .unwrap()
        .average();
        assert!((mean - exact).abs() < 4.0 * se, "i={i}: {mean} ± {se} vs {exact}");
    }
}
