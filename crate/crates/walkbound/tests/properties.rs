//! Randomized invariants over the generators, spectral quantities, and
//! the report formats. Each property states a contract that holds for
//! every valid input, not a frozen example.

use proptest::prelude::*;

use walkbound::bounds::{BoundContext, BoundId, BoundReport, PASS_TOL};
use walkbound::gen::{
    min_entry, random_general_ergodic, random_marked_set, random_row_perturbation,
    random_symmetric_ergodic, rng_from_seed,
};
use walkbound::markov::{tv_distance, Distribution};
use walkbound::matrix::l1_norm;
use walkbound::perturb::truncate_precision;
use walkbound::report::fmt_float;
use walkbound::sampler::overlap;
use walkbound::szegedy::{build_walk, mark};
use walkbound::Error;

fn distribution(n: usize, rng: &mut impl rand::Rng) -> Distribution {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    Distribution::new(raw.into_iter().map(|w| w / total).collect())
}

proptest! {
    /// Symmetric generator: rows sum to one, entries stay positive, and the
    /// structure flags hold.
    #[test]
    fn symmetric_generator_invariants(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let p = random_symmetric_ergodic(n, &mut rng);
        prop_assert!(p.is_symmetric());
        prop_assert!(p.is_ergodic());
        prop_assert!(min_entry(&p) > 0.0);
        for i in 0..n {
            prop_assert!((p.matrix().row_sum(i) - 1.0).abs() <= 1e-12);
        }
    }

    /// General generator: row-stochastic, ergodic, and contracting with
    /// coefficient at most 0.9 by construction.
    #[test]
    fn general_generator_invariants(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let p = random_general_ergodic(n, &mut rng);
        prop_assert!(p.is_ergodic());
        prop_assert!(p.ergodicity_coefficient() <= 0.9 + 1e-12);
        for i in 0..n {
            prop_assert!((p.matrix().row_sum(i) - 1.0).abs() <= 1e-12);
        }
    }

    /// The stationary distribution is a genuine fixed point: nonnegative,
    /// normalized, with a tiny balance residual.
    #[test]
    fn stationary_distribution_is_a_fixed_point(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let p = random_general_ergodic(n, &mut rng);
        let pi = p.stationary_distribution().unwrap();
        prop_assert!(pi.weights().iter().all(|&w| w >= 0.0));
        prop_assert!((pi.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(pi.balance_residual(&p) <= 1e-10);
    }

    /// The contraction coefficient lies in [0, 1] and really contracts
    /// zero-sum vectors in l1.
    #[test]
    fn contraction_coefficient_contracts(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let p = random_general_ergodic(n, &mut rng);
        let tau = p.ergodicity_coefficient();
        prop_assert!((0.0..=1.0).contains(&tau));

        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        for x in v.iter_mut() {
            *x -= mean;
        }
        let image = p.matrix().vec_mul(&v);
        prop_assert!(l1_norm(&image) <= tau * l1_norm(&v) + 1e-12);
    }

    /// Classical fidelity against total variation: overlap is bounded by
    /// (1 - tv)^2 from below and never leaves [0, 1].
    #[test]
    fn overlap_dominates_squared_tv_complement(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = distribution(n, &mut rng);
        let b = distribution(n, &mut rng);
        let f = overlap(&a, &b).unwrap();
        let tv = tv_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!(f >= (1.0 - tv) * (1.0 - tv) - 1e-12);
    }

    /// Truncation on symmetric chains: off-diagonals land on the 2^-bits
    /// grid, the diagonal repair keeps rows stochastic, and the noise
    /// respects the grid step. Rows whose rounded mass would exceed 1 are
    /// a legitimate refusal.
    #[test]
    fn truncation_keeps_rows_on_the_grid(
        n in 2usize..=8,
        seed in any::<u64>(),
        bits in 4u32..=24,
    ) {
        let mut rng = rng_from_seed(seed);
        let p = random_symmetric_ergodic(n, &mut rng);
        let scale = (1u64 << bits) as f64;
        match truncate_precision(&p, bits) {
            Ok((q, e)) => {
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            let cell = q.entry(i, j) * scale;
                            prop_assert!((cell - cell.round()).abs() <= 1e-9);
                        }
                    }
                    prop_assert!((q.matrix().row_sum(i) - 1.0).abs() <= 1e-12);
                }
                prop_assert!(e.norm_linf() <= n as f64 / scale);
            }
            Err(Error::InfeasibleTruncation { .. }) => {
                // Only possible when some diagonal is smaller than the
                // worst-case rounding drift of its row.
                let drift = (n - 1) as f64 / (2.0 * scale);
                let min_diag = (0..n).map(|i| p.entry(i, i)).fold(f64::MAX, f64::min);
                prop_assert!(min_diag < drift + 1e-12);
            }
            Err(other) => prop_assert!(false, "unexpected error: {other}"),
        }
    }

    /// Row perturbations keep rows stochastic, have zero row sums, and hit
    /// the requested max-row-sum magnitude when no clipping is needed.
    #[test]
    fn row_perturbation_preserves_stochasticity(
        n in 2usize..=10,
        seed in any::<u64>(),
        share in 0.05f64..=0.95,
    ) {
        let mut rng = rng_from_seed(seed);
        let p = random_symmetric_ergodic(n, &mut rng);
        let magnitude = share * min_entry(&p);
        let (q, e) = random_row_perturbation(&p, magnitude, seed ^ 1).unwrap();
        prop_assert!(q.n() == n);
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| e.entries().get(i, j)).sum();
            prop_assert!(row_sum.abs() <= 1e-12);
        }
        prop_assert!((e.norm_linf() - magnitude).abs() <= 1e-12 * magnitude.max(1.0));
    }

    /// Marking: the permutation is a bijection that lists unmarked states
    /// first, epsilon is the marked fraction, and block shapes add up.
    #[test]
    fn marking_partitions_the_state_space(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let p = random_symmetric_ergodic(n, &mut rng);
        let marked = random_marked_set(n, &mut rng);
        let part = mark(&p, &marked).unwrap();

        let mut seen = vec![false; n];
        for &s in part.permutation() {
            prop_assert!(!seen[s]);
            seen[s] = true;
        }
        prop_assert!(seen.iter().all(|&b| b));
        prop_assert!((part.epsilon() - marked.len() as f64 / n as f64).abs() <= 1e-15);
        prop_assert!(part.unmarked_count() == n - marked.len());
        prop_assert!(part.unmarked_block().rows() == n - marked.len());
        prop_assert!(part.marked_block().rows() == marked.len());
    }

    /// Walk operators are orthogonal for every chain, symmetric or not.
    #[test]
    fn walk_operator_is_orthogonal(n in 2usize..=6, seed in any::<u64>(), sym in any::<bool>()) {
        let mut rng = rng_from_seed(seed);
        let p = if sym {
            random_symmetric_ergodic(n, &mut rng)
        } else {
            random_general_ergodic(n, &mut rng)
        };
        let walk = build_walk(&p).unwrap();
        prop_assert!(walk.orthogonality_defect() <= 1e-10);
    }

    /// Total variation is a metric-shaped quantity on distributions:
    /// symmetric, within [0, 1], zero on equal inputs.
    #[test]
    fn tv_distance_is_symmetric_and_bounded(n in 2usize..=10, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = distribution(n, &mut rng);
        let b = distribution(n, &mut rng);
        let ab = tv_distance(&a, &b).unwrap();
        let ba = tv_distance(&b, &a).unwrap();
        prop_assert!(ab == ba);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!(tv_distance(&a, &a).unwrap() == 0.0);
    }

    /// A report passes exactly when its slack clears the shared tolerance.
    #[test]
    fn report_pass_tracks_slack(lhs in -1e3f64..1e3, rhs in -1e3f64..1e3) {
        let report = BoundReport::new(BoundId::Weyl, lhs, rhs, BoundContext::for_n(2));
        prop_assert!(report.pass == (report.slack >= -PASS_TOL));
        prop_assert!(report.slack == rhs - lhs);
    }

    /// The canonical float format round-trips every finite value bit for
    /// bit (negative zero is folded into zero first).
    #[test]
    fn canonical_float_format_round_trips(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        let v = if v == 0.0 { 0.0 } else { v };
        let text = fmt_float(v);
        let back: f64 = text.parse().unwrap();
        prop_assert!(back == v, "{text} parsed to {back:e}, wanted {v:e}");
    }
}
