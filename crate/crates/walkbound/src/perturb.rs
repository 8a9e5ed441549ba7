//! Controlled disturbances of a reference chain: `Q = P + E`.
//!
//! Two noise models are provided. Precision truncation rounds every
//! off-diagonal entry to the nearest multiple of `2^-bits` and repairs the
//! diagonal so rows still sum to 1, modelling storage of a chain at reduced
//! precision. Random additive noise draws a symmetric zero-row-sum
//! direction, scales it to a requested spectral norm, and rejects draws
//! that would push an entry of `Q` negative.
//!
//! Both models return the perturbed chain together with a [`Perturbation`]
//! carrying the noise matrix and its two operator norms, which is exactly
//! what the bound checks consume.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as RandDistribution, StandardNormal};

use crate::error::{Error, Result};
use crate::markov::{norms, StochasticMatrix};
use crate::matrix::Matrix;

/// Rejection budget for random noise that must keep `Q` entrywise
/// nonnegative.
pub const REJECTION_ATTEMPTS: u32 = 100;

/// A noise matrix `E = Q - P` with cached operator norms.
#[derive(Debug, Clone)]
pub struct Perturbation {
    entries: Matrix,
    norm_l2: f64,
    norm_linf: f64,
}

impl Perturbation {
    /// Wraps a noise matrix, measuring both norms.
    pub fn from_matrix(entries: Matrix) -> Self {
        let (norm_l2, norm_linf) = norms(&entries);
        Perturbation {
            entries,
            norm_l2,
            norm_linf,
        }
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2
    }

    pub fn norm_linf(&self) -> f64 {
        self.norm_linf
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }
}

/// Noise configuration as given on the command line.
#[derive(Debug, Clone)]
pub enum NoiseKind {
    /// Round off-diagonals to multiples of `2^-bits`.
    Truncate { bits: u32 },
    /// Seeded random symmetric noise with spectral norm `magnitude`.
    Random { magnitude: f64 },
}

#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseSpec {
    /// Rejects out-of-range widths and magnitudes before any work happens.
    pub fn check(&self) -> Result<()> {
        match self.kind {
            NoiseKind::Truncate { bits } => {
                if !(2..=52).contains(&bits) {
                    return Err(Error::InvalidBits { bits });
                }
            }
            NoiseKind::Random { magnitude } => {
                if !(magnitude > 0.0 && magnitude <= 1.0) {
                    return Err(Error::InvalidMagnitude { magnitude });
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, p: &StochasticMatrix) -> Result<(StochasticMatrix, Perturbation)> {
        self.check()?;
        match self.kind {
            NoiseKind::Truncate { bits } => truncate_precision(p, bits),
            NoiseKind::Random { magnitude } => random_perturbation(p, magnitude, self.seed),
        }
    }
}

/// Rounds every off-diagonal entry of a symmetric chain to the nearest
/// multiple of `2^-bits`, mirrors the upper triangle, and resets each
/// diagonal entry to `1 - (off-diagonal row sum)`.
///
/// Fails with [`Error::InfeasibleTruncation`] when a repaired diagonal
/// would be negative. The rounded chain may lose ergodicity (entries can
/// round to zero); the returned flags report that honestly.
pub fn truncate_precision(
    p: &StochasticMatrix,
    bits: u32,
) -> Result<(StochasticMatrix, Perturbation)> {
    if !(2..=52).contains(&bits) {
        return Err(Error::InvalidBits { bits });
    }
    if !p.is_symmetric() {
        return Err(Error::NotSymmetric {
            defect: p.matrix().symmetry_defect(),
        });
    }
    let n = p.n();
    let grid = (2.0f64).powi(bits as i32);
    let mut q = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let rounded = (p.entry(i, j) * grid).round() / grid;
            q.set(i, j, rounded);
            q.set(j, i, rounded);
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| q.get(i, j)).sum();
        let diagonal = 1.0 - off;
        if diagonal < 0.0 {
            return Err(Error::InfeasibleTruncation {
                bits,
                row: i,
                diagonal,
            });
        }
        q.set(i, i, diagonal);
    }
    let e = q.sub(p.matrix());
    let q = StochasticMatrix::validate(q)?;
    Ok((q, Perturbation::from_matrix(e)))
}

/// Additive symmetric noise with spectral norm `magnitude`, deterministic
/// in `seed`.
///
/// Each attempt samples an i.i.d. normal symmetric matrix, double-centers
/// it onto the zero-row-sum subspace (one pass suffices for symmetric
/// input), scales it so `||E||_2 = magnitude`, and accepts if `P + E` stays
/// entrywise nonnegative. After 100 rejected draws the requested magnitude
/// is declared infeasible.
pub fn random_perturbation(
    p: &StochasticMatrix,
    magnitude: f64,
    seed: u64,
) -> Result<(StochasticMatrix, Perturbation)> {
    if !p.is_symmetric() {
        return Err(Error::NotSymmetric {
            defect: p.matrix().symmetry_defect(),
        });
    }
    if !p.is_ergodic() {
        return Err(Error::NotErgodic);
    }
    if !(0.0..=1.0).contains(&magnitude) {
        return Err(Error::InvalidMagnitude { magnitude });
    }
    let n = p.n();
    if magnitude == 0.0 {
        let zero = Matrix::zeros(n, n);
        return Ok((p.clone(), Perturbation::from_matrix(zero)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..REJECTION_ATTEMPTS {
        let direction = centered_symmetric_direction(n, &mut rng);
        let spread = crate::eigen::spectral_norm(&direction);
        if spread == 0.0 {
            continue;
        }
        let e = direction.scale(magnitude / spread);
        let q_raw = p.matrix().add(&e);
        if (0..n).all(|i| (0..n).all(|j| q_raw.get(i, j) >= 0.0)) {
            let q = StochasticMatrix::validate(q_raw)?;
            return Ok((q, Perturbation::from_matrix(e)));
        }
    }
    Err(Error::CannotPreserveStochasticity {
        magnitude,
        attempts: REJECTION_ATTEMPTS,
    })
}

/// Symmetric normal sample projected onto zero row and column sums by
/// double centering.
fn centered_symmetric_direction(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let g: f64 = StandardNormal.sample(rng);
            a.set(i, j, g);
            a.set(j, i, g);
        }
    }
    let row_means: Vec<f64> = (0..n).map(|i| a.row_sum(i) / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            b.set(i, j, a.get(i, j) - row_means[i] - row_means[j] + grand);
        }
    }
    b
}

/// `E = Q - P` with measured norms. Row sums of the result vanish to the
/// extent the two inputs' rows both sum to 1.
pub fn decompose(q: &StochasticMatrix, p: &StochasticMatrix) -> Result<Perturbation> {
    if q.n() != p.n() {
        return Err(Error::DimensionMismatch {
            left: q.n(),
            right: p.n(),
        });
    }
    Ok(Perturbation::from_matrix(q.matrix().sub(p.matrix())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn truncation_rounds_to_dyadic_grid() {
        let third = 1.0 / 3.0;
        let p = StochasticMatrix::from_rows(&[
            vec![third, third, third],
            vec![third, third, third],
            vec![third, third, third],
        ])
        .unwrap();
        let (q, e) = truncate_precision(&p, 8).unwrap();
        // 1/3 * 256 = 85.33.., so off-diagonals land on 85/256.
        assert_eq!(q.entry(0, 1), 85.0 / 256.0);
        assert_eq!(q.entry(1, 0), 85.0 / 256.0);
        // Diagonal absorbs the rounding: 1 - 2*85/256 = 86/256.
        assert_eq!(q.entry(0, 0), 86.0 / 256.0);
        assert_eq!(q.matrix().row_sum(0), 1.0);
        assert!(e.norm_l2() > 0.0);
    }

    #[test]
    fn truncation_of_representable_chain_is_identity() {
        let p = StochasticMatrix::validate(Matrix::constant(4, 0.25)).unwrap();
        let (q, e) = truncate_precision(&p, 8).unwrap();
        assert_eq!(q.matrix(), p.matrix());
        assert_eq!(e.norm_l2(), 0.0);
        assert_eq!(e.norm_linf(), 0.0);
    }

    #[test]
    fn truncation_can_disconnect_a_chain() {
        let a = (2.0f64).powi(-60);
        let p = StochasticMatrix::from_rows(&[vec![1.0 - a, a], vec![a, 1.0 - a]]).unwrap();
        assert!(p.is_ergodic());
        let (q, _) = truncate_precision(&p, 8).unwrap();
        assert_eq!(q.entry(0, 1), 0.0);
        assert!(
            !q.is_ergodic(),
            "rounded-away edges must surface as lost ergodicity"
        );
    }

    #[test]
    fn truncation_rejects_negative_diagonal() {
        // Off-diagonals 0.33 on a 1/32 grid round up to 0.34375 each; three
        // of them exceed 1 and the repaired diagonal would be negative.
        let p = StochasticMatrix::from_rows(&[
            vec![0.01, 0.33, 0.33, 0.33],
            vec![0.33, 0.01, 0.33, 0.33],
            vec![0.33, 0.33, 0.01, 0.33],
            vec![0.33, 0.33, 0.33, 0.01],
        ])
        .unwrap();
        let err = truncate_precision(&p, 5).unwrap_err();
        match err {
            Error::InfeasibleTruncation {
                bits,
                row,
                diagonal,
            } => {
                assert_eq!(bits, 5);
                assert_eq!(row, 0);
                assert!(diagonal < 0.0);
            }
            other => panic!("expected InfeasibleTruncation, got {other:?}"),
        }
    }

    #[test]
    fn truncation_requires_symmetry() {
        let p = StochasticMatrix::from_rows(&[vec![0.75, 0.25], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            truncate_precision(&p, 8),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn truncation_bit_range_is_enforced() {
        let p = StochasticMatrix::validate(Matrix::constant(2, 0.5)).unwrap();
        assert!(matches!(
            truncate_precision(&p, 1),
            Err(Error::InvalidBits { bits: 1 })
        ));
        assert!(matches!(
            truncate_precision(&p, 53),
            Err(Error::InvalidBits { bits: 53 })
        ));
    }

    #[test]
    fn random_noise_is_reproducible_and_scaled() {
        let p = StochasticMatrix::validate(Matrix::constant(4, 0.25)).unwrap();
        let (q1, e1) = random_perturbation(&p, 0.05, 42).unwrap();
        let (q2, e2) = random_perturbation(&p, 0.05, 42).unwrap();
        assert_eq!(
            q1.matrix(),
            q2.matrix(),
            "same seed must reproduce Q bit for bit"
        );
        assert_eq!(e1.entries(), e2.entries());

        assert!(e1.norm_l2() <= 0.05 + 1e-12);
        assert_abs_diff_eq!(e1.norm_l2(), 0.05, epsilon = 1e-10);

        // Zero row sums of the noise.
        for i in 0..4 {
            assert_abs_diff_eq!(e1.entries().row_sum(i), 0.0, epsilon = 1e-12);
        }
        // Q inherits symmetry.
        assert!(q1.is_symmetric());
    }

    #[test]
    fn random_noise_with_different_seed_differs() {
        let p = StochasticMatrix::validate(Matrix::constant(4, 0.25)).unwrap();
        let (_, e1) = random_perturbation(&p, 0.05, 1).unwrap();
        let (_, e2) = random_perturbation(&p, 0.05, 2).unwrap();
        assert_ne!(e1.entries(), e2.entries());
    }

    #[test]
    fn zero_magnitude_noise_is_the_identity_perturbation() {
        let p = StochasticMatrix::validate(Matrix::constant(3, 1.0 / 3.0)).unwrap();
        let (q, e) = random_perturbation(&p, 0.0, 7).unwrap();
        assert_eq!(q.matrix(), p.matrix());
        assert_eq!(e.norm_l2(), 0.0);
    }

    #[test]
    fn infeasible_magnitude_exhausts_the_rejection_budget() {
        // Off-diagonal slack is 0.002 but the requested norm is 1, so a
        // draw only survives if every off-diagonal of the scaled direction
        // exceeds -0.002. That cone is vanishingly thin; this seed never
        // lands in it.
        let n = 4;
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j { 0.994 } else { 0.002 };
            }
        }
        let p = StochasticMatrix::from_rows(&rows).unwrap();
        assert!(p.is_ergodic());
        let err = random_perturbation(&p, 1.0, 5).unwrap_err();
        assert!(matches!(
            err,
            Error::CannotPreserveStochasticity { attempts: 100, .. }
        ));
    }

    #[test]
    fn magnitude_range_is_enforced() {
        let p = StochasticMatrix::validate(Matrix::constant(2, 0.5)).unwrap();
        assert!(matches!(
            random_perturbation(&p, -0.1, 0),
            Err(Error::InvalidMagnitude { .. })
        ));
        assert!(matches!(
            random_perturbation(&p, 1.5, 0),
            Err(Error::InvalidMagnitude { .. })
        ));
    }

    #[test]
    fn decompose_recovers_known_offdiagonal_shift() {
        let p = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
        let q = StochasticMatrix::from_rows(&[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
        let e = decompose(&q, &p).unwrap();
        assert_abs_diff_eq!(e.norm_l2(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(e.norm_linf(), 0.1, epsilon = 1e-15);
        for i in 0..2 {
            assert_abs_diff_eq!(e.entries().row_sum(i), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn decompose_rejects_mismatched_dimensions() {
        let p = StochasticMatrix::validate(Matrix::constant(2, 0.5)).unwrap();
        let q = StochasticMatrix::validate(Matrix::constant(3, 1.0 / 3.0)).unwrap();
        assert!(matches!(
            decompose(&q, &p),
            Err(Error::DimensionMismatch { left: 3, right: 2 })
        ));
    }

    #[test]
    fn noise_spec_validation() {
        assert!(NoiseSpec {
            kind: NoiseKind::Truncate { bits: 8 },
            seed: 0
        }
        .check()
        .is_ok());
        assert!(NoiseSpec {
            kind: NoiseKind::Truncate { bits: 1 },
            seed: 0
        }
        .check()
        .is_err());
        assert!(NoiseSpec {
            kind: NoiseKind::Random { magnitude: 0.5 },
            seed: 0
        }
        .check()
        .is_ok());
        assert!(NoiseSpec {
            kind: NoiseKind::Random { magnitude: 0.0 },
            seed: 0
        }
        .check()
        .is_err());
    }
}
