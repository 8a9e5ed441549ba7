//! Quantization of a row-stochastic chain into a unitary walk on edge
//! space, plus the absorbing-boundary machinery used by hitting bounds.
//!
//! A chain on `n` states lifts to the `n^2`-dimensional space of directed
//! edges `|x, y>`. Two reflections generate the walk:
//!
//! ```text
//! R = 2 A - I    where A projects onto span{ |x> (x) |p_x> },
//!                |p_x> carrying amplitudes sqrt(P[x][y]),
//! S |x, y> = |y, x>    the swap involution,
//! W = S R.
//! ```
//!
//! `W` is orthogonal. Its eigenphases are tied to the discriminant
//! `D[x][y] = sqrt(P[x][y] P[y][x])`: every eigenvalue `lambda` of `D`
//! contributes walk eigenphases `+-arccos(lambda)`. The test suite pins
//! this correspondence on explicitly constructed small walks and on random
//! chains; [`SzegedyWalk::phase_correspondence_defect`] measures it.
//!
//! Marking states turns the chain absorbing: marked rows are replaced by
//! identity rows, the state space is reordered so unmarked states come
//! first, and the top-left block `P1` of the reordered matrix controls how
//! slowly probability leaks into the marked set. `||P1||_2 < 1` for an
//! ergodic chain with a proper nonempty marked set, and the two hitting
//! proxies `1/(1 - ||P1||)` (classical) and its square root (quantum) are
//! exposed directly.

use crate::eigen::{spectral_norm, symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::markov::StochasticMatrix;
use crate::matrix::Matrix;

/// Default cap on the edge-space dimension `n^2`.
pub const DEFAULT_DIM_LIMIT: usize = 4096;

/// Leak norms this close to 1 make the hitting proxies meaningless.
pub const SATURATION_TOL: f64 = 1e-12;

/// Cosines within this of +-1 snap exactly, keeping arccos well behaved
/// at the spectrum's edge.
const PHASE_SNAP: f64 = 1e-12;

/// A quantized chain: the orthogonal walk operator on edge space and the
/// discriminant that predicts its spectrum.
#[derive(Debug, Clone)]
pub struct SzegedyWalk {
    n: usize,
    operator: Matrix,
    discriminant: Matrix,
}

/// Reordering of a chain around a marked subset, with the four blocks of
/// the reordered matrix and the absorbing variant of the chain.
#[derive(Debug, Clone)]
pub struct MarkedPartition {
    marked: Vec<usize>,
    permutation: Vec<usize>,
    epsilon: f64,
    p1: Matrix,
    p2: Matrix,
    p3: Matrix,
    p4: Matrix,
    absorbing: StochasticMatrix,
}

/// Quantizes `p` with the default edge-space cap.
pub fn build_walk(p: &StochasticMatrix) -> Result<SzegedyWalk> {
    build_walk_limited(p, DEFAULT_DIM_LIMIT)
}

/// Quantizes `p`, refusing edge spaces larger than `dim_limit`.
pub fn build_walk_limited(p: &StochasticMatrix, dim_limit: usize) -> Result<SzegedyWalk> {
    let n = p.n();
    let dim = n * n;
    if dim > dim_limit {
        return Err(Error::DimensionLimit {
            dim,
            limit: dim_limit,
        });
    }

    // Reflection through the span of the row-amplitude states. Block x
    // couples edges (x, y) and (x, y'); the amplitude product is computed
    // under a single square root to keep representable entries exact.
    let mut reflection = Matrix::zeros(dim, dim);
    for x in 0..n {
        for y in 0..n {
            for yp in 0..n {
                let v =
                    2.0 * (p.entry(x, y) * p.entry(x, yp)).sqrt() - if y == yp { 1.0 } else { 0.0 };
                reflection.set(x * n + y, x * n + yp, v);
            }
        }
    }

    let mut swap = Matrix::zeros(dim, dim);
    for x in 0..n {
        for y in 0..n {
            swap.set(x * n + y, y * n + x, 1.0);
        }
    }

    let operator = swap.mul(&reflection);

    let mut discriminant = Matrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            discriminant.set(x, y, (p.entry(x, y) * p.entry(y, x)).sqrt());
        }
    }

    Ok(SzegedyWalk {
        n,
        operator,
        discriminant,
    })
}

impl SzegedyWalk {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Edge-space dimension `n^2`.
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    pub fn operator(&self) -> &Matrix {
        &self.operator
    }

    pub fn discriminant(&self) -> &Matrix {
        &self.discriminant
    }

    /// Max-entry deviation of `W^T W` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let gram = self.operator.transpose().mul(&self.operator);
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram.get(i, j) - target).abs());
            }
        }
        worst
    }

    /// One application of the walk operator.
    pub fn step(&self, state: &[f64]) -> Vec<f64> {
        self.operator.mul_vec(state)
    }

    /// Unsigned eigenphases of the walk, sorted ascending.
    ///
    /// An orthogonal matrix has spectrum on the unit circle with conjugate
    /// phases paired, so the symmetric part `(W + W^T)/2` carries every
    /// phase's cosine. One symmetric eigensolve recovers the full phase
    /// multiset up to sign.
    pub fn eigenphases(&self) -> Vec<f64> {
        let sym = self.operator.add(&self.operator.transpose()).scale(0.5);
        let mut phases: Vec<f64> = symmetric_eigenvalues(&sym)
            .into_iter()
            .map(snap_arccos)
            .collect();
        phases.sort_by(|a, b| a.partial_cmp(b).expect("phases are finite"));
        phases
    }

    /// Phases the discriminant predicts: `arccos(lambda)` for each
    /// eigenvalue, doubled when the conjugate pair is distinct.
    pub fn expected_phases(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for lambda in symmetric_eigenvalues(&self.discriminant) {
            let theta = snap_arccos(lambda);
            out.push(theta);
            if theta > 0.0 && theta < std::f64::consts::PI {
                out.push(theta);
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).expect("phases are finite"));
        out
    }

    /// Worst matching distance when the predicted phase multiset is
    /// embedded into the walk's phase multiset, nearest-unused first.
    pub fn phase_correspondence_defect(&self) -> f64 {
        let actual = self.eigenphases();
        let expected = self.expected_phases();
        let mut used = vec![false; actual.len()];
        let mut worst: f64 = 0.0;
        for target in expected {
            let start = actual.partition_point(|&a| a < target);
            // Nearest unused neighbor on each side of the insertion point;
            // the list is sorted, so the first unused slot per side is that
            // side's best offer.
            let mut lo = start as isize - 1;
            while lo >= 0 && used[lo as usize] {
                lo -= 1;
            }
            let mut hi = start;
            while hi < actual.len() && used[hi] {
                hi += 1;
            }
            let lo_d = (lo >= 0).then(|| (target - actual[lo as usize]).abs());
            let hi_d = (hi < actual.len()).then(|| (actual[hi] - target).abs());
            let best = match (lo_d, hi_d) {
                (Some(dl), Some(dh)) if dl <= dh => Some((dl, lo as usize)),
                (Some(_), Some(dh)) => Some((dh, hi)),
                (Some(dl), None) => Some((dl, lo as usize)),
                (None, Some(dh)) => Some((dh, hi)),
                (None, None) => None,
            };
            let (d, idx) = best.expect("walk spectrum is never smaller than prediction");
            used[idx] = true;
            worst = worst.max(d);
        }
        worst
    }
}

fn snap_arccos(c: f64) -> f64 {
    let c = c.clamp(-1.0, 1.0);
    if c > 1.0 - PHASE_SNAP {
        0.0
    } else if c < -1.0 + PHASE_SNAP {
        std::f64::consts::PI
    } else {
        c.acos()
    }
}

/// Reorders `p` so the states in `marked` come last and extracts the four
/// blocks plus the absorbing chain (marked rows replaced by identity rows).
pub fn mark(p: &StochasticMatrix, marked: &[usize]) -> Result<MarkedPartition> {
    let n = p.n();
    let mut flags = vec![false; n];
    for &m in marked {
        if m >= n {
            return Err(Error::MarkedIndexOutOfRange { index: m, n });
        }
        flags[m] = true;
    }
    let marked: Vec<usize> = (0..n).filter(|&i| flags[i]).collect();
    if marked.is_empty() {
        return Err(Error::EmptyMarkedSet);
    }
    if marked.len() == n {
        return Err(Error::AllMarked);
    }

    let unmarked: Vec<usize> = (0..n).filter(|&i| !flags[i]).collect();
    let mut permutation = unmarked.clone();
    permutation.extend_from_slice(&marked);

    let u = unmarked.len();
    let mut reordered = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            reordered.set(i, j, p.entry(permutation[i], permutation[j]));
        }
    }

    let all: Vec<usize> = (0..n).collect();
    let p1 = reordered.submatrix(&all[..u], &all[..u]);
    let p2 = reordered.submatrix(&all[..u], &all[u..]);
    let p3 = reordered.submatrix(&all[u..], &all[..u]);
    let p4 = reordered.submatrix(&all[u..], &all[u..]);

    let mut absorbing = reordered;
    for i in u..n {
        for j in 0..n {
            absorbing.set(i, j, if i == j { 1.0 } else { 0.0 });
        }
    }
    let absorbing = StochasticMatrix::validate(absorbing)?;

    let epsilon = marked.len() as f64 / n as f64;
    Ok(MarkedPartition {
        marked,
        permutation,
        epsilon,
        p1,
        p2,
        p3,
        p4,
        absorbing,
    })
}

impl MarkedPartition {
    /// Marked states, original labels, ascending.
    pub fn marked(&self) -> &[usize] {
        &self.marked
    }

    /// Maps new (reordered) index to original label; unmarked states first.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Marked fraction `|M| / n`.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> usize {
        self.permutation.len()
    }

    pub fn unmarked_count(&self) -> usize {
        self.n() - self.marked.len()
    }

    /// Transitions among unmarked states (the leak-controlling block).
    pub fn unmarked_block(&self) -> &Matrix {
        &self.p1
    }

    /// Transitions from unmarked into marked states.
    pub fn unmarked_to_marked(&self) -> &Matrix {
        &self.p2
    }

    /// Transitions from marked back into unmarked states.
    pub fn marked_to_unmarked(&self) -> &Matrix {
        &self.p3
    }

    /// Transitions among marked states.
    pub fn marked_block(&self) -> &Matrix {
        &self.p4
    }

    /// The chain with marked states made absorbing, in the reordered basis.
    pub fn absorbing_chain(&self) -> &StochasticMatrix {
        &self.absorbing
    }
}

/// `||P1||_2`: spectral norm of the unmarked block.
pub fn leak_norm(part: &MarkedPartition) -> f64 {
    spectral_norm(part.unmarked_block())
}

/// Expected classical absorption scale `1 / (1 - ||P1||_2)`.
pub fn classical_hitting_proxy(part: &MarkedPartition) -> Result<f64> {
    let leak = leak_norm(part);
    if leak >= 1.0 - SATURATION_TOL {
        return Err(Error::SaturatedLeak { norm: leak });
    }
    Ok(1.0 / (1.0 - leak))
}

/// Quantum counterpart: the square root of the classical proxy, so the
/// quadratic relation between the two is exact by construction.
pub fn hitting_proxy(part: &MarkedPartition) -> Result<f64> {
    classical_hitting_proxy(part).map(f64::sqrt)
}

/// Runs the walk of the absorbing chain and records the probability mass
/// that has left the unmarked-source edges after each step.
///
/// The walker starts in the uniform superposition over edges leaving
/// unmarked states; `F(t)` is the initial mass on those edges minus the
/// mass still there at step `t`. All mass starts unmarked, so `F(0) = 0`
/// exactly and growth of `F` measures absorption.
pub fn simulate_absorption(
    part: &MarkedPartition,
    steps: usize,
    dim_limit: usize,
) -> Result<Vec<f64>> {
    let walk = build_walk_limited(part.absorbing_chain(), dim_limit)?;
    let n = part.n();
    let u = part.unmarked_count();

    let amp = 1.0 / ((u * n) as f64).sqrt();
    let mut state = vec![0.0; n * n];
    for x in 0..u {
        for y in 0..n {
            state[x * n + y] = amp;
        }
    }

    let unmarked_mass = |state: &[f64]| -> f64 {
        (0..u)
            .flat_map(|x| (0..n).map(move |y| x * n + y))
            .map(|idx| state[idx] * state[idx])
            .sum()
    };

    // Measuring against the realized initial mass (1 up to rounding)
    // keeps F(0) at exactly zero.
    let initial_mass = unmarked_mass(&state);
    let mut curve = Vec::with_capacity(steps + 1);
    for _ in 0..=steps {
        curve.push((initial_mass - unmarked_mass(&state)).clamp(0.0, 1.0));
        state = walk.step(&state);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn two_cycle_walk_operator_is_exact() {
        let p = StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let w = build_walk(&p).unwrap();
        // Deterministic edges make every amplitude 0 or 1; the operator is
        // exactly the signed permutation worked out by hand.
        let expected = Matrix::from_rows(&[
            vec![-1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, -1.0],
        ]);
        assert_eq!(w.operator(), &expected);

        let phases = w.eigenphases();
        assert_abs_diff_eq!(phases[0], 0.0, epsilon = 1e-12);
        for &p in &phases[1..] {
            assert_abs_diff_eq!(p, PI, epsilon = 1e-12);
        }

        // Discriminant eigenvalues {1, -1} predict phases {0, pi}.
        assert_eq!(w.expected_phases().len(), 2);
        assert!(w.phase_correspondence_defect() <= 1e-12);
    }

    #[test]
    fn uniform_walk_contains_quarter_phases() {
        let p = StochasticMatrix::validate(Matrix::constant(2, 0.5)).unwrap();
        let w = build_walk(&p).unwrap();
        // Amplitude products are representable (0.5 exactly), so the walk
        // is exactly this 4-cycle permutation on edges:
        // |00> -> |10> -> |11> -> |01> -> |00>.
        let expected = Matrix::from_rows(&[
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]);
        assert_eq!(w.operator(), &expected);

        let phases = w.eigenphases();
        assert_abs_diff_eq!(phases[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(phases[1], FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(phases[2], FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(phases[3], PI, epsilon = 1e-12);

        // Discriminant spectrum {1, 0} predicts {0, pi/2, pi/2}.
        let predicted = w.expected_phases();
        assert_eq!(predicted.len(), 3);
        assert!(w.phase_correspondence_defect() <= 1e-12);
    }

    #[test]
    fn phase_matching_survives_roundoff_on_doubled_phases() {
        // A nondegenerate spectrum puts each doubled phase in its own
        // cluster with roundoff jitter; the matcher must pair every
        // predicted copy with its own nearest actual copy instead of
        // being pushed onto a far neighbor once one twin is consumed.
        let p = StochasticMatrix::from_rows(&[
            vec![0.5, 0.3, 0.2],
            vec![0.3, 0.4, 0.3],
            vec![0.2, 0.3, 0.5],
        ])
        .unwrap();
        let w = build_walk(&p).unwrap();
        assert_eq!(w.expected_phases().len(), 5);
        assert!(
            w.phase_correspondence_defect() <= 1e-12,
            "defect {}",
            w.phase_correspondence_defect()
        );
    }

    #[test]
    fn walk_operator_is_orthogonal_for_asymmetric_chains() {
        let p = StochasticMatrix::from_rows(&[vec![0.75, 0.25], vec![0.5, 0.5]]).unwrap();
        let w = build_walk(&p).unwrap();
        assert!(w.orthogonality_defect() <= 1e-10);
        assert_abs_diff_eq!(
            w.discriminant().get(0, 1),
            (0.25f64 * 0.5).sqrt(),
            epsilon = 1e-15
        );
        // The discriminant is symmetric even when the chain is not.
        assert_eq!(w.discriminant().symmetry_defect(), 0.0);
    }

    #[test]
    fn discriminant_reproduces_symmetric_chains() {
        let p = StochasticMatrix::from_rows(&[
            vec![0.2, 0.5, 0.3],
            vec![0.5, 0.25, 0.25],
            vec![0.3, 0.25, 0.45],
        ])
        .unwrap();
        let w = build_walk(&p).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(w.discriminant().get(i, j), p.entry(i, j), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dimension_limit_is_enforced() {
        let p = StochasticMatrix::validate(Matrix::constant(3, 1.0 / 3.0)).unwrap();
        assert!(matches!(
            build_walk_limited(&p, 8),
            Err(Error::DimensionLimit { dim: 9, limit: 8 })
        ));
    }

    #[test]
    fn marking_moves_marked_states_last() {
        let p = StochasticMatrix::from_rows(&[
            vec![0.2, 0.5, 0.3],
            vec![0.5, 0.25, 0.25],
            vec![0.3, 0.25, 0.45],
        ])
        .unwrap();
        let part = mark(&p, &[0]).unwrap();
        assert_eq!(part.permutation(), &[1, 2, 0]);
        assert_abs_diff_eq!(part.epsilon(), 1.0 / 3.0, epsilon = 1e-15);
        // P1 holds transitions among {1, 2} in their new order.
        assert_eq!(part.unmarked_block().get(0, 0), 0.25);
        assert_eq!(part.unmarked_block().get(0, 1), 0.25);
        assert_eq!(part.unmarked_block().get(1, 1), 0.45);
        // Absorbing chain: marked row became an identity row.
        assert_eq!(part.absorbing_chain().entry(2, 2), 1.0);
        assert_eq!(part.absorbing_chain().entry(2, 0), 0.0);
        assert!(!part.absorbing_chain().is_ergodic());
    }

    #[test]
    fn marking_rejects_degenerate_sets() {
        let p = StochasticMatrix::validate(Matrix::constant(3, 1.0 / 3.0)).unwrap();
        assert!(matches!(mark(&p, &[]), Err(Error::EmptyMarkedSet)));
        assert!(matches!(mark(&p, &[0, 1, 2]), Err(Error::AllMarked)));
        assert!(matches!(
            mark(&p, &[3]),
            Err(Error::MarkedIndexOutOfRange { index: 3, n: 3 })
        ));
    }

    #[test]
    fn marking_dedupes_and_sorts() {
        let p = StochasticMatrix::validate(Matrix::constant(4, 0.25)).unwrap();
        let part = mark(&p, &[2, 1, 2]).unwrap();
        assert_eq!(part.marked(), &[1, 2]);
        assert_eq!(part.permutation(), &[0, 3, 1, 2]);
        assert_abs_diff_eq!(part.epsilon(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn leak_norm_of_uniform_chains() {
        let p4 = StochasticMatrix::validate(Matrix::constant(4, 0.25)).unwrap();
        let part = mark(&p4, &[3]).unwrap();
        assert_abs_diff_eq!(leak_norm(&part), 0.75, epsilon = 1e-12);

        let p16 = StochasticMatrix::validate(Matrix::constant(16, 1.0 / 16.0)).unwrap();
        let part = mark(&p16, &[15]).unwrap();
        assert_abs_diff_eq!(leak_norm(&part), 15.0 / 16.0, epsilon = 1e-12);
    }

    #[test]
    fn hitting_proxies_on_uniform_chains() {
        let p4 = StochasticMatrix::validate(Matrix::constant(4, 0.25)).unwrap();
        let part = mark(&p4, &[3]).unwrap();
        assert_abs_diff_eq!(
            classical_hitting_proxy(&part).unwrap(),
            4.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(hitting_proxy(&part).unwrap(), 2.0, epsilon = 1e-10);

        let p16 = StochasticMatrix::validate(Matrix::constant(16, 1.0 / 16.0)).unwrap();
        let part = mark(&p16, &[15]).unwrap();
        assert_abs_diff_eq!(hitting_proxy(&part).unwrap(), 4.0, epsilon = 1e-10);
    }

    #[test]
    fn quadratic_proxy_relation_is_exact() {
        let p = StochasticMatrix::from_rows(&[
            vec![0.2, 0.5, 0.3],
            vec![0.5, 0.25, 0.25],
            vec![0.3, 0.25, 0.45],
        ])
        .unwrap();
        for marked in [vec![0], vec![1], vec![0, 2]] {
            let part = mark(&p, &marked).unwrap();
            let classical = classical_hitting_proxy(&part).unwrap();
            let quantum = hitting_proxy(&part).unwrap();
            assert_eq!(
                quantum,
                classical.sqrt(),
                "proxy must be the exact square root"
            );
        }
    }

    #[test]
    fn saturated_leak_is_rejected() {
        let p = StochasticMatrix::validate(Matrix::identity(2)).unwrap();
        let part = mark(&p, &[1]).unwrap();
        assert_abs_diff_eq!(leak_norm(&part), 1.0, epsilon = 1e-12);
        assert!(matches!(
            classical_hitting_proxy(&part),
            Err(Error::SaturatedLeak { .. })
        ));
    }

    #[test]
    fn absorption_starts_at_zero_and_crosses_half_quickly() {
        let p = StochasticMatrix::validate(Matrix::constant(2, 0.5)).unwrap();
        let part = mark(&p, &[1]).unwrap();
        let curve = simulate_absorption(&part, 2, DEFAULT_DIM_LIMIT).unwrap();
        assert_eq!(curve.len(), 3);
        assert_eq!(curve[0], 0.0);
        // Worked by hand: after one step the state is (|00> + |10>)/sqrt 2,
        // leaving exactly half the mass on unmarked-source edges.
        assert_abs_diff_eq!(curve[1], 0.5, epsilon = 1e-12);
        assert!(curve[2] >= 0.5 - 1e-12, "absorbed mass must stay at half");
    }

    #[test]
    fn absorption_is_deterministic_for_equal_inputs() {
        let p = StochasticMatrix::from_rows(&[
            vec![0.2, 0.5, 0.3],
            vec![0.5, 0.25, 0.25],
            vec![0.3, 0.25, 0.45],
        ])
        .unwrap();
        let a = simulate_absorption(&mark(&p, &[2]).unwrap(), 16, DEFAULT_DIM_LIMIT).unwrap();
        let b = simulate_absorption(&mark(&p, &[2]).unwrap(), 16, DEFAULT_DIM_LIMIT).unwrap();
        assert_eq!(a, b);
    }
}
