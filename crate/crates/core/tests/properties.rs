use proptest::prelude::*;
use sqmx::cli::synthesize_quadratic;
use sqmx::linalg::random::{random_matrix, random_symmetric};
use sqmx::linalg::norm2;
use sqmx::quadmin::{approximate_min, approximate_min_ball, solve_trs};
use sqmx::sampling::sample_indices;
use sqmx::svest::{estimate_sigma_t, rank_residual, SvConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn samples_are_sorted_distinct_and_reproducible(n in 1usize..500, k in 1usize..500, seed in any::<u64>()) {
        let k = k.min(n);
        let s = sample_indices(n, k, seed).unwrap();
        prop_assert!(s.indices().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.indices().iter().all(|&i| i < n));
        let again = sample_indices(n, k, seed).unwrap();
        prop_assert_eq!(s.indices(), again.indices());
    }

    #[test]
    fn trs_is_feasible_and_monotone_in_radius(n in 1usize..10, seed in 0u64..1000, r in 0.05f64..4.0) {
        let h = random_symmetric(n, seed);
        let c = random_matrix(n, 1, seed + 1).column(0);
        let small = solve_trs(&h, &c, r).unwrap();
        let large = solve_trs(&h, &c, 1.5 * r).unwrap();
        prop_assert!(norm2(&small.minimizer) <= r * (1.0 + 1e-8));
        prop_assert!(large.value <= small.value + 1e-9);
        prop_assert!(small.value <= 1e-12);
    }

    #[test]
    fn residuals_are_nonincreasing(rows in 1usize..9, cols in 1usize..9, seed in 0u64..1000) {
        let b = random_matrix(rows, cols, seed);
        let mut prev = rank_residual(&b, 0).unwrap();
        for t in 1..=b.min_dim() {
            let cur = rank_residual(&b, t).unwrap();
            prop_assert!(cur <= prev);
            prop_assert!(cur >= 0.0);
            prev = cur;
        }
    }

    #[test]
    fn estimates_scale_with_the_input(seed in 0u64..200, alpha in 0.1f64..10.0) {
        let a = random_matrix(30, 30, seed);
        let cfg = SvConfig::default();
        let base = estimate_sigma_t(&a, 2, 15, seed, &cfg).unwrap().estimate;
        let scaled = estimate_sigma_t(&a.scaled(alpha), 2, 15, seed, &cfg).unwrap().estimate;
        prop_assert!((scaled - alpha * base).abs() <= 1e-10 * alpha * base.max(1.0));
    }

    #[test]
    fn ball_estimate_is_at_least_the_unconstrained_one(seed in 0u64..100, r in 0.1f64..10.0) {
        let p = synthesize_quadratic(60, seed);
        let free = approximate_min(&p, 20, seed);
        let ball = approximate_min_ball(&p, r, 20, seed);
        if let (Ok(free), Ok(ball)) = (free, ball) {
            prop_assert!(ball.estimate >= free.estimate - 1e-12);
            prop_assert!(ball.estimate <= 0.0);
        }
    }
}
