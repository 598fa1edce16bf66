//! Property tests over randomized small laws: exact-law algebra, advantage
//! geometry against brute-force enumeration, and extinction monotonicity.

use num_traits::One;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use brw_compete::advantage::{
    advantage_mass, in_advantage_set, reach, supercritical_report, thinned_extinction_probability,
};
use brw_compete::laws::{
    min_coupling_law, offspring_mean, pgf_eval, validate_law, CountPmf, ReproductionLaw,
};
use brw_compete::testkit::{brute, random_direction, random_small_law};
use brw_compete::{rat, Rat};

fn law_pair(seed: u64, dimension: usize) -> (ReproductionLaw, ReproductionLaw) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_small_law(&mut rng, dimension);
    let mut b = random_small_law(&mut rng, dimension);
    // Couplings require the same displacement law.
    b.displacement_pmf = a.displacement_pmf.clone();
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn min_coupling_is_a_valid_law_with_smaller_mean(seed in any::<u64>(), d in 1usize..=3) {
        let (a, b) = law_pair(seed, d);
        let coupled = min_coupling_law(&a, &b).expect("same displacement law");
        // Exact normalization, no tolerance.
        let total: Rat = coupled.offspring_pmf.values().cloned().sum();
        prop_assert_eq!(total, Rat::one());
        // Stochastic-minimum property.
        let mean = offspring_mean(&coupled.offspring_pmf);
        prop_assert!(mean <= offspring_mean(&a.offspring_pmf));
        prop_assert!(mean <= offspring_mean(&b.offspring_pmf));
        // The coupling preserves every law invariant (mean strictly above 1
        // is inherited, which validation re-checks).
        prop_assert!(validate_law(&coupled, d, &rat(1, 2)).is_valid());
    }

    #[test]
    fn pgf_is_nondecreasing_and_convex(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let law = random_small_law(&mut rng, 1);
        let pmf = &law.offspring_pmf;
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let values: Vec<f64> = grid.iter().map(|&s| pgf_eval(pmf, s).unwrap()).collect();
        for w in values.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        for w in values.windows(3) {
            // Discrete convexity on the uniform grid.
            prop_assert!(w[0] + w[2] >= 2.0 * w[1] - 1e-9);
        }
        prop_assert!((pgf_eval(pmf, 1.0).unwrap() - 1.0).abs() < 1e-12);
        // Valid laws put no mass at zero.
        prop_assert_eq!(pgf_eval(pmf, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn geometry_matches_brute_force(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let red = random_small_law(&mut rng, d);
        let blue = random_small_law(&mut rng, d);
        let x = random_direction(&mut rng, d, 3);

        prop_assert_eq!(reach(&red, &x).unwrap(), brute::reach(&red, &x));
        prop_assert_eq!(
            advantage_mass(&blue, &red, &x).unwrap(),
            brute::advantage_mass(&blue, &red, &x)
        );
        let report = supercritical_report(&red, &blue, &x).unwrap();
        prop_assert_eq!(report.epsilon_gap, brute::epsilon_gap(&blue, &red, &x));
        prop_assert_eq!(
            report.p_threshold,
            brute::p_threshold(&report.advantage_mass)
        );
        for y in blue.support() {
            prop_assert_eq!(
                in_advantage_set(&red, &x, y).unwrap(),
                brute::in_advantage_set(&red, &x, y)
            );
        }
    }

    #[test]
    fn own_support_never_beats_own_reach(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let law = random_small_law(&mut rng, d);
        let x = random_direction(&mut rng, d, 3);
        for y in law.support() {
            prop_assert!(!in_advantage_set(&law, &x, y).unwrap());
        }
    }

    #[test]
    fn reach_is_positively_homogeneous(seed in any::<u64>(), d in 1usize..=3, k in 1i32..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let law = random_small_law(&mut rng, d);
        let x = random_direction(&mut rng, d, 3);
        let scaled = x.scale(k);
        prop_assert_eq!(
            reach(&law, &scaled).unwrap(),
            i64::from(k) * reach(&law, &x).unwrap()
        );
        // Advantage membership depends only on the direction of x.
        for y in law.support() {
            prop_assert_eq!(
                in_advantage_set(&law, &scaled, y).unwrap(),
                in_advantage_set(&law, &x, y).unwrap()
            );
        }
    }

    #[test]
    fn epsilon_gap_is_at_least_one(seed in any::<u64>(), d in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let red = random_small_law(&mut rng, d);
        let blue = random_small_law(&mut rng, d);
        let x = random_direction(&mut rng, d, 3);
        let report = supercritical_report(&red, &blue, &x).unwrap();
        if let Some(gap) = report.epsilon_gap {
            prop_assert!(gap >= 1);
        }
    }

    #[test]
    fn extinction_nonincreasing_in_keep_prob(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let law = random_small_law(&mut rng, 1);
        let pmf = &law.offspring_pmf;
        let mean = offspring_mean(pmf);
        let grid: Vec<Rat> = (0..=10).map(|i| rat(i, 10)).collect();
        let mut previous = f64::INFINITY;
        for keep in &grid {
            let q = thinned_extinction_probability(pmf, keep, 1e-12).unwrap();
            prop_assert!(q <= previous + 1e-9);
            previous = q;
            // Exactly 1 iff the thinned mean is at most 1, decided exactly.
            if mean.clone() * keep <= Rat::one() {
                prop_assert_eq!(q, 1.0);
            } else {
                prop_assert!(q < 1.0);
            }
        }
    }
}

#[test]
fn delta_one_coupling_collapses() {
    // min with a constant 1 is the constant 1.
    let one = ReproductionLaw::nearest_neighbor(2, &[(1, 1, 1)]);
    let other = ReproductionLaw::nearest_neighbor(2, &[(2, 1, 4), (5, 3, 4)]);
    let coupled = min_coupling_law(&one, &other).unwrap();
    assert_eq!(coupled.offspring_pmf, CountPmf::from([(1, rat(1, 1))]));
}
