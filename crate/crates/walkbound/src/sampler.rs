//! Desk-scale emulation of staged stationary-distribution sampling.
//!
//! A target chain `Q` is approached through interpolants
//! `Q_i = (1 - b_i) J/n + b_i Q` with `b_i = i/r`, walking from the
//! uniform chain to `Q`. Adjacent stationary distributions must overlap
//! well for staged preparation to make sense; [`ChainSequence`] records
//! every overlap `(sum_x sqrt(pi_i(x) pi_{i+1}(x)))^2` and their minimum.
//!
//! [`emulate_sampling`] realizes only the contract of a sampler: it
//! produces a distribution within total variation `eta` of the target,
//! deterministically per seed. [`verify_triangle`] then feeds that output
//! into the end-to-end ceiling
//! `D(pi(P), output) <= eta + ||E||_inf / (2 (1 - tau_1(P)))`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bounds::{quantum_sample_bound, BoundReport};
use crate::error::{Error, Result};
use crate::gen::rng_from_seed;
use crate::markov::{tv_distance, Distribution, StochasticMatrix};
use crate::matrix::Matrix;

/// Overlaps below this mean the sequence is unusable, not merely weak.
pub const OVERLAP_HARD_FLOOR: f64 = 1e-6;

/// Default warning threshold for adjacent overlaps.
pub const OVERLAP_WARN_THRESHOLD: f64 = 0.5;

/// How far the emulated sample's target may sit from the chain's true
/// stationary distribution before triangle verification refuses it.
pub const TARGET_MATCH_TOL: f64 = 1e-9;

/// Halvings of the noise scale while rechecking the TV contract.
const SCALE_RETRIES: u32 = 64;

/// Interpolated chains from the uniform chain to a target, with their
/// stationary distributions and adjacent overlaps.
#[derive(Debug, Clone)]
pub struct ChainSequence {
    chains: Vec<StochasticMatrix>,
    distributions: Vec<Distribution>,
    overlaps: Vec<f64>,
    min_overlap: f64,
    gaps: Option<Vec<f64>>,
    warnings: Vec<String>,
}

/// Output of one emulated sampling run against a sequence's target.
#[derive(Debug, Clone)]
pub struct EmulatedSample {
    target: Distribution,
    output: Distribution,
    eta: f64,
    achieved_tv: f64,
}

/// Squared amplitude overlap `(sum_x sqrt(p_x q_x))^2`, in `[0, 1]`.
pub fn overlap(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch {
            left: p.n(),
            right: q.n(),
        });
    }
    let s: f64 = p
        .weights()
        .iter()
        .zip(q.weights())
        .map(|(&a, &b)| (a * b).sqrt())
        .sum();
    Ok((s * s).clamp(0.0, 1.0))
}

/// Builds the `r + 1`-chain linear schedule ending at `q`, with the
/// default overlap warning threshold.
pub fn build_sequence(q: &StochasticMatrix, r: usize) -> Result<ChainSequence> {
    build_sequence_with_threshold(q, r, OVERLAP_WARN_THRESHOLD)
}

/// As [`build_sequence`], warning about overlaps below `warn_threshold`.
///
/// Weak overlaps are recorded, never fatal here: how much overlap a
/// staged sampler needs is a tunable, so the decision to abort belongs to
/// the consumer of the sequence.
pub fn build_sequence_with_threshold(
    q: &StochasticMatrix,
    r: usize,
    warn_threshold: f64,
) -> Result<ChainSequence> {
    if r < 1 {
        return Err(Error::EmptySchedule);
    }
    if !q.is_ergodic() {
        return Err(Error::NotErgodic);
    }
    let n = q.n();
    let uniform = 1.0 / n as f64;

    let mut chains = Vec::with_capacity(r + 1);
    for i in 0..=r {
        let beta = i as f64 / r as f64;
        let mut m = Matrix::zeros(n, n);
        for row in 0..n {
            for col in 0..n {
                m.set(row, col, (1.0 - beta) * uniform + beta * q.entry(row, col));
            }
        }
        chains.push(StochasticMatrix::validate(m)?);
    }

    let distributions: Vec<Distribution> = chains
        .iter()
        .map(|c| c.stationary_distribution())
        .collect::<Result<_>>()?;

    let mut overlaps = Vec::with_capacity(r);
    let mut warnings = Vec::new();
    for i in 0..r {
        let o = overlap(&distributions[i], &distributions[i + 1])?;
        if o < warn_threshold {
            warnings.push(format!(
                "overlap {o:.6e} between steps {i} and {} is below {warn_threshold}",
                i + 1
            ));
        }
        overlaps.push(o);
    }
    let min_overlap = overlaps.iter().cloned().fold(1.0, f64::min);

    let gaps = if chains.iter().all(|c| c.is_symmetric()) {
        Some(
            chains
                .iter()
                .map(|c| c.spectral_summary().map(|s| s.gap))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };

    Ok(ChainSequence {
        chains,
        distributions,
        overlaps,
        min_overlap,
        gaps,
        warnings,
    })
}

impl ChainSequence {
    /// Number of interpolation steps `r` (one fewer than the chain count).
    pub fn steps(&self) -> usize {
        self.chains.len() - 1
    }

    pub fn chains(&self) -> &[StochasticMatrix] {
        &self.chains
    }

    pub fn distributions(&self) -> &[Distribution] {
        &self.distributions
    }

    /// Adjacent squared overlaps, one per step.
    pub fn overlaps(&self) -> &[f64] {
        &self.overlaps
    }

    /// The schedule's weakest adjacent overlap.
    pub fn min_overlap(&self) -> f64 {
        self.min_overlap
    }

    /// Spectral gaps of each interpolant, present when the whole schedule
    /// is symmetric. Reported as-is; no cost model is attached to them.
    pub fn gaps(&self) -> Option<&[f64]> {
        self.gaps.as_deref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// The schedule's final stationary distribution.
    pub fn target(&self) -> &Distribution {
        self.distributions.last().expect("schedule is never empty")
    }
}

impl EmulatedSample {
    pub fn target(&self) -> &Distribution {
        &self.target
    }

    pub fn output(&self) -> &Distribution {
        &self.output
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn achieved_tv(&self) -> f64 {
        self.achieved_tv
    }
}

/// Black-box sampler emulation: returns a distribution within total
/// variation `eta` of the sequence's target, deterministic per seed.
///
/// A zero-sum noise direction is scaled to a TV displacement drawn from
/// `[0, eta]`, clipped to stay a distribution, and rescaled downward until
/// the realized displacement honors the contract.
pub fn emulate_sampling(seq: &ChainSequence, eta: f64, seed: u64) -> Result<EmulatedSample> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidEta { eta });
    }
    for (i, &o) in seq.overlaps().iter().enumerate() {
        if o < OVERLAP_HARD_FLOOR {
            return Err(Error::OverlapTooSmall {
                left: i,
                right: i + 1,
                overlap: o,
            });
        }
    }
    let target = seq.target().clone();
    if eta == 0.0 {
        return Ok(EmulatedSample {
            output: target.clone(),
            target,
            eta,
            achieved_tv: 0.0,
        });
    }

    let n = target.n();
    let mut rng = rng_from_seed(seed);
    let requested: f64 = rng.random_range(0.0..=eta);

    // Zero-sum direction; a degenerate all-equal draw has no direction to
    // offer, so redraw (measure-zero event, loop terminates in practice
    // immediately).
    let mut direction;
    loop {
        let draws: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        direction = draws.iter().map(|d| d - mean).collect::<Vec<f64>>();
        if direction.iter().map(|d| d.abs()).sum::<f64>() > 0.0 {
            break;
        }
    }
    let l1: f64 = direction.iter().map(|d| d.abs()).sum();

    // Unclipped, a scale s displaces the distribution by s * l1 / 2 in TV.
    let mut scale = 2.0 * requested / l1;
    for _ in 0..=SCALE_RETRIES {
        let mut weights: Vec<f64> = target
            .weights()
            .iter()
            .zip(&direction)
            .map(|(&w, &d)| (w + scale * d).max(0.0))
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let output = Distribution::new(weights);
        let achieved_tv = tv_distance(&output, &target)?;
        if achieved_tv <= eta {
            return Ok(EmulatedSample {
                target,
                output,
                eta,
                achieved_tv,
            });
        }
        scale /= 2.0;
    }
    unreachable!("halving the scale drives the displacement to zero");
}

/// Checks the sampled output against the end-to-end ceiling
/// `D(pi(P), output) <= eta + ||E||_inf / (2 (1 - tau_1(P)))`, first
/// confirming the sample was aimed at `Q`'s stationary distribution.
pub fn verify_triangle(
    p: &StochasticMatrix,
    q: &StochasticMatrix,
    sample: &EmulatedSample,
) -> Result<BoundReport> {
    let pi_q = q.stationary_distribution()?;
    let tv = tv_distance(sample.target(), &pi_q)?;
    if tv > TARGET_MATCH_TOL {
        return Err(Error::SampleTargetMismatch { tv });
    }
    quantum_sample_bound(p, q, sample.eta(), Some(sample.output()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain(rows: &[Vec<f64>]) -> StochasticMatrix {
        StochasticMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn overlap_matches_hand_arithmetic() {
        let p = Distribution::new(vec![0.5, 0.5]);
        let q = Distribution::new(vec![0.75, 0.25]);
        // (sqrt(3/8) + sqrt(1/8))^2 = (2 + sqrt 3) / 4.
        let expected = (2.0 + 3.0f64.sqrt()) / 4.0;
        assert_abs_diff_eq!(overlap(&p, &q).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(
            overlap(&p, &q).unwrap(),
            0.9330127018922193,
            epsilon = 1e-15
        );
        // Symmetric in its arguments.
        assert_eq!(overlap(&p, &q).unwrap(), overlap(&q, &p).unwrap());
    }

    #[test]
    fn overlap_endpoints() {
        let p = Distribution::new(vec![2.0 / 3.0, 1.0 / 3.0]);
        assert_abs_diff_eq!(overlap(&p, &p).unwrap(), 1.0, epsilon = 1e-12);
        let a = Distribution::new(vec![1.0, 0.0]);
        let b = Distribution::new(vec![0.0, 1.0]);
        assert_eq!(overlap(&a, &b).unwrap(), 0.0);
        let c = Distribution::new(vec![1.0 / 3.0; 3]);
        assert!(matches!(
            overlap(&p, &c),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn one_step_schedule_has_the_uniform_chain_and_the_target() {
        let q = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let seq = build_sequence(&q, 1).unwrap();
        assert_eq!(seq.steps(), 1);
        assert_eq!(seq.chains()[0].entry(0, 0), 0.5);
        assert_eq!(seq.chains()[0].entry(1, 0), 0.5);
        assert_eq!(seq.chains()[1].matrix(), q.matrix());
        assert_eq!(seq.overlaps().len(), 1);
        assert!(
            seq.gaps().is_none(),
            "asymmetric schedule has no gap report"
        );
    }

    #[test]
    fn symmetric_schedules_keep_unit_overlaps_and_report_gaps() {
        let q = chain(&[vec![0.7, 0.3], vec![0.3, 0.7]]);
        let seq = build_sequence(&q, 5).unwrap();
        for &o in seq.overlaps() {
            assert_abs_diff_eq!(o, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(seq.min_overlap(), 1.0, epsilon = 1e-12);
        let gaps = seq.gaps().expect("symmetric schedule reports gaps");
        assert_eq!(gaps.len(), 6);
        // Uniform chain has gap 1; the target's gap is 0.6.
        assert_abs_diff_eq!(gaps[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gaps[5], 0.6, epsilon = 1e-12);
        assert!(seq.warnings().is_empty());
    }

    #[test]
    fn worked_asymmetric_schedule_stays_tightly_overlapped() {
        let q = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let seq = build_sequence(&q, 4).unwrap();
        assert!(seq.overlaps().iter().all(|&o| o >= 0.99));
        let target = seq.target();
        assert_abs_diff_eq!(target.weights()[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(target.weights()[1], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn schedule_rejects_degenerate_requests() {
        let q = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        assert!(matches!(build_sequence(&q, 0), Err(Error::EmptySchedule)));
        let frozen = StochasticMatrix::validate(Matrix::identity(2)).unwrap();
        assert!(matches!(build_sequence(&frozen, 3), Err(Error::NotErgodic)));
    }

    #[test]
    fn emulation_honors_the_tv_contract() {
        let q = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let seq = build_sequence(&q, 4).unwrap();
        let sample = emulate_sampling(&seq, 0.05, 7).unwrap();
        assert!(sample.achieved_tv() <= 0.05);
        assert_abs_diff_eq!(
            sample.output().weights().iter().sum::<f64>(),
            1.0,
            epsilon = 1e-12
        );
        assert!(sample.output().weights().iter().all(|&w| w >= 0.0));
        // Deterministic per seed; a different seed moves the output.
        let again = emulate_sampling(&seq, 0.05, 7).unwrap();
        assert_eq!(sample.output().weights(), again.output().weights());
        let other = emulate_sampling(&seq, 0.05, 8).unwrap();
        assert_ne!(sample.output().weights(), other.output().weights());
    }

    #[test]
    fn zero_eta_emulation_copies_the_target() {
        let q = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let seq = build_sequence(&q, 2).unwrap();
        let sample = emulate_sampling(&seq, 0.0, 123).unwrap();
        assert_eq!(sample.output().weights(), sample.target().weights());
        assert_eq!(sample.achieved_tv(), 0.0);
    }

    #[test]
    fn emulation_validates_eta() {
        let q = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let seq = build_sequence(&q, 2).unwrap();
        assert!(matches!(
            emulate_sampling(&seq, 1.0, 0),
            Err(Error::InvalidEta { .. })
        ));
        assert!(matches!(
            emulate_sampling(&seq, -0.01, 0),
            Err(Error::InvalidEta { .. })
        ));
    }

    #[test]
    fn broken_sequences_are_refused() {
        let q = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let mut seq = build_sequence(&q, 2).unwrap();
        seq.overlaps[1] = 1e-9;
        assert!(matches!(
            emulate_sampling(&seq, 0.05, 1),
            Err(Error::OverlapTooSmall {
                left: 1,
                right: 2,
                ..
            })
        ));
    }

    #[test]
    fn triangle_verification_on_the_worked_pair() {
        let p = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let q = chain(&[vec![0.7, 0.3], vec![0.5, 0.5]]);
        let seq = build_sequence(&q, 4).unwrap();
        let sample = emulate_sampling(&seq, 0.01, 3).unwrap();
        let report = verify_triangle(&p, &q, &sample).unwrap();
        assert_abs_diff_eq!(report.rhs, 23.0 / 300.0, epsilon = 1e-12);
        assert!(report.pass, "slack {}", report.slack);
        assert!(report.lhs > 0.0, "a real sample fills the lhs");
    }

    #[test]
    fn triangle_verification_rejects_mistargeted_samples() {
        let p = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let q = chain(&[vec![0.7, 0.3], vec![0.5, 0.5]]);
        // A sample aimed at pi(P) is not a sample of Q's distribution.
        let seq = build_sequence(&p, 4).unwrap();
        let sample = emulate_sampling(&seq, 0.01, 3).unwrap();
        assert!(matches!(
            verify_triangle(&p, &q, &sample),
            Err(Error::SampleTargetMismatch { .. })
        ));
    }
}
