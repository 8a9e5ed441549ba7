//! Executable perturbation bounds. Each check compares a measured
//! quantity (lhs) against its proven ceiling (rhs) and returns a
//! [`BoundReport`]; [`sweep`] runs the whole battery over seeded random
//! instances and tallies violations.
//!
//! The inequality family, for symmetric ergodic `P` with gap `delta`,
//! perturbed `Q = P + E` with gap `Delta`, and marked fraction `epsilon`:
//!
//! ```text
//! weyl            max_i |lambda_i(P) - lambda_i(Q)|  <=  ||E||_2
//! gap_sandwich    delta - ||E||_2  <=  Delta  <=  delta + ||E||_2
//! interlacing     ||E_1||_2  <=  ||E||_2          (unmarked submatrix)
//! leak_q1         ||Q_1||_2  <=  min{ ||P_1||_2 + ||E||_2,
//!                                     1 - (delta - ||E||_2) epsilon / 2 }
//! hitting         sqrt(1 / (1 - ||Q_1||_2))  <=  sqrt(2 / ((delta - ||E||_2) epsilon))
//! ```
//!
//! and for general ergodic row-stochastic chains with contraction
//! coefficient `tau = tau_1(P) < 1`:
//!
//! ```text
//! tv              D(pi(P), pi(Q))  <=  ||E||_inf / (2 (1 - tau))
//! quantum_sample  D(pi(P), sampled)  <=  eta + ||E||_inf / (2 (1 - tau))
//! ```
//!
//! All right-hand sides use explicitly pinned constants so every check is
//! a concrete number-versus-number comparison, never an asymptotic claim.

use std::collections::BTreeMap;

use rand::Rng;

use crate::eigen::{spectral_norm, symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::gen::{
    derive_seed, min_entry, random_general_ergodic, random_marked_set, random_row_perturbation,
    random_symmetric_ergodic, rng_from_seed,
};
use crate::markov::{tv_distance, Distribution, StochasticMatrix};
use crate::perturb::{decompose, random_perturbation, Perturbation};
use crate::szegedy::{hitting_proxy, leak_norm, mark};

/// A bound passes when its slack `rhs - lhs` is no worse than this.
/// Strictly negative so eigensolver noise cannot fail a true inequality.
pub const PASS_TOL: f64 = 1e-9;

/// Contraction coefficients this close to 1 make the TV bounds vacuous.
pub const ERGODIC_COEFF_TOL: f64 = 1e-12;

/// Safety factor keeping capped sweep magnitudes strictly below half the
/// gap.
const HALF_GAP_FACTOR: f64 = 0.499;

/// Fallback magnitude factor guaranteeing first-draw feasibility when the
/// requested noise cannot keep the chain stochastic.
const RETRY_ENTRY_FACTOR: f64 = 0.99;

/// Which inequality a report speaks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BoundId {
    Weyl,
    GapSandwich,
    Interlacing,
    LeakQ1,
    Hitting,
    Tv,
    QuantumSample,
}

impl BoundId {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::Weyl => "weyl",
            BoundId::GapSandwich => "gap_sandwich",
            BoundId::Interlacing => "interlacing",
            BoundId::LeakQ1 => "leak_q1",
            BoundId::Hitting => "hitting",
            BoundId::Tv => "tv",
            BoundId::QuantumSample => "quantum_sample",
        }
    }
}

/// Identifies the instance a report was measured on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundContext {
    pub n: usize,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub noise_l2: Option<f64>,
    pub noise_linf: Option<f64>,
    pub note: Option<String>,
}

impl BoundContext {
    pub fn for_n(n: usize) -> Self {
        BoundContext {
            n,
            ..BoundContext::default()
        }
    }
}

/// One checked inequality: measured lhs, proven ceiling rhs, and the
/// verdict. `pass` holds exactly when `slack >= -PASS_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub bound_id: BoundId,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub context: BoundContext,
}

impl BoundReport {
    pub fn new(bound_id: BoundId, lhs: f64, rhs: f64, context: BoundContext) -> Self {
        let slack = rhs - lhs;
        BoundReport {
            bound_id,
            lhs,
            rhs,
            slack,
            pass: slack >= -PASS_TOL,
            context,
        }
    }
}

fn require_symmetric(p: &StochasticMatrix) -> Result<()> {
    if p.is_symmetric() {
        Ok(())
    } else {
        Err(Error::NotSymmetric {
            defect: p.matrix().symmetry_defect(),
        })
    }
}

fn require_same_n(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<()> {
    if p.n() == q.n() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            left: p.n(),
            right: q.n(),
        })
    }
}

/// Largest shift of any sorted eigenvalue against the noise norm:
/// `max_i |lambda_i(P) - lambda_i(Q)| <= ||E||_2`. Symmetric inputs only.
pub fn check_weyl(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<BoundReport> {
    require_same_n(p, q)?;
    require_symmetric(p)?;
    require_symmetric(q)?;
    let e = decompose(q, p)?;
    let ep = symmetric_eigenvalues(p.matrix());
    let eq = symmetric_eigenvalues(q.matrix());
    let lhs = ep
        .iter()
        .zip(&eq)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut context = BoundContext::for_n(p.n());
    context.noise_l2 = Some(e.norm_l2());
    context.noise_linf = Some(e.norm_linf());
    Ok(BoundReport::new(BoundId::Weyl, lhs, e.norm_l2(), context))
}

/// Two-sided gap stability: `delta - ||E||_2 <= Delta <= delta + ||E||_2`.
/// The report encodes whichever side is tighter; `slack` is the minimum of
/// the two sides, so one report carries the whole sandwich.
pub fn check_gap_sandwich(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<BoundReport> {
    require_same_n(p, q)?;
    let e = decompose(q, p)?;
    let delta = p.spectral_summary()?.gap;
    let cap_delta = q.spectral_summary()?.gap;
    let lower_slack = cap_delta - (delta - e.norm_l2());
    let upper_slack = (delta + e.norm_l2()) - cap_delta;

    let mut context = BoundContext::for_n(p.n());
    context.noise_l2 = Some(e.norm_l2());
    context.noise_linf = Some(e.norm_linf());
    let (lhs, rhs, side) = if lower_slack <= upper_slack {
        (delta - e.norm_l2(), cap_delta, "lower side tighter")
    } else {
        (cap_delta, delta + e.norm_l2(), "upper side tighter")
    };
    context.note = Some(side.to_string());
    Ok(BoundReport::new(BoundId::GapSandwich, lhs, rhs, context))
}

/// Submatrix norm monotonicity: deleting the marked rows and columns of
/// the noise cannot increase its spectral norm, `||E_1||_2 <= ||E||_2`.
pub fn check_interlacing(e: &Perturbation, marked: &[usize]) -> Result<BoundReport> {
    let n = e.n();
    let mut flags = vec![false; n];
    for &m in marked {
        if m >= n {
            return Err(Error::MarkedIndexOutOfRange { index: m, n });
        }
        flags[m] = true;
    }
    let unmarked: Vec<usize> = (0..n).filter(|&i| !flags[i]).collect();
    if unmarked.len() == n {
        return Err(Error::EmptyMarkedSet);
    }
    if unmarked.is_empty() {
        return Err(Error::EmptyComplement);
    }
    let sub = e.entries().submatrix(&unmarked, &unmarked);
    let lhs = spectral_norm(&sub);
    let mut context = BoundContext::for_n(n);
    context.epsilon = Some((n - unmarked.len()) as f64 / n as f64);
    context.noise_l2 = Some(e.norm_l2());
    context.noise_linf = Some(e.norm_linf());
    Ok(BoundReport::new(
        BoundId::Interlacing,
        lhs,
        e.norm_l2(),
        context,
    ))
}

/// Leak-norm ceiling for the perturbed chain:
/// `||Q_1||_2 <= min{ ||P_1||_2 + ||E||_2, 1 - (delta - ||E||_2) epsilon / 2 }`.
///
/// When the noise swallows the gap (`delta <= ||E||_2`) the second branch
/// is vacuous; the check then degrades to the additive branch alone and
/// says so in the context note rather than failing.
pub fn check_leak_q1(
    p: &StochasticMatrix,
    q: &StochasticMatrix,
    marked: &[usize],
) -> Result<BoundReport> {
    require_same_n(p, q)?;
    require_symmetric(p)?;
    require_symmetric(q)?;
    let e = decompose(q, p)?;
    let delta = p.spectral_summary()?.gap;
    let part_p = mark(p, marked)?;
    let part_q = mark(q, marked)?;
    let lhs = leak_norm(&part_q);
    let additive = leak_norm(&part_p) + e.norm_l2();

    let mut context = BoundContext::for_n(p.n());
    context.epsilon = Some(part_p.epsilon());
    context.noise_l2 = Some(e.norm_l2());
    context.noise_linf = Some(e.norm_linf());

    let rhs = if delta > e.norm_l2() {
        let gap_branch = 1.0 - (delta - e.norm_l2()) * part_p.epsilon() / 2.0;
        if additive <= gap_branch {
            context.note = Some("additive branch active".to_string());
        } else {
            context.note = Some("gap branch active".to_string());
        }
        additive.min(gap_branch)
    } else {
        context.note = Some(format!(
            "gap {delta:.3e} dominated by noise {:.3e}; additive branch only",
            e.norm_l2()
        ));
        additive
    };
    Ok(BoundReport::new(BoundId::LeakQ1, lhs, rhs, context))
}

/// Hitting proxy against the gap-and-marked-fraction ceiling:
/// `sqrt(1 / (1 - ||Q_1||_2)) <= sqrt(2 / ((delta - ||E||_2) epsilon))`.
///
/// The constant 2 comes from substituting the leak-norm gap branch into
/// the proxy; the right side is undefined once the noise reaches the gap,
/// which is a hard [`Error::GapDominatedByNoise`].
pub fn check_hitting(
    p: &StochasticMatrix,
    q: &StochasticMatrix,
    marked: &[usize],
) -> Result<BoundReport> {
    require_same_n(p, q)?;
    require_symmetric(p)?;
    require_symmetric(q)?;
    let e = decompose(q, p)?;
    let delta = p.spectral_summary()?.gap;
    if delta <= e.norm_l2() {
        return Err(Error::GapDominatedByNoise {
            gap: delta,
            noise: e.norm_l2(),
        });
    }
    let part_q = mark(q, marked)?;
    let lhs = hitting_proxy(&part_q)?;
    let rhs = (2.0 / ((delta - e.norm_l2()) * part_q.epsilon())).sqrt();
    let mut context = BoundContext::for_n(p.n());
    context.epsilon = Some(part_q.epsilon());
    context.noise_l2 = Some(e.norm_l2());
    context.noise_linf = Some(e.norm_linf());
    Ok(BoundReport::new(BoundId::Hitting, lhs, rhs, context))
}

/// Stationary-distribution stability in total variation:
/// `D(pi(P), pi(Q)) <= ||E||_inf / (2 (1 - tau_1(P)))`.
///
/// Works for general (non-symmetric) ergodic chains. The coefficient is
/// measured on `P`, never on `Q`.
pub fn check_tv_bound(p: &StochasticMatrix, q: &StochasticMatrix) -> Result<BoundReport> {
    require_same_n(p, q)?;
    if !p.is_ergodic() || !q.is_ergodic() {
        return Err(Error::NotErgodic);
    }
    let tau = p.ergodicity_coefficient();
    if tau >= 1.0 - ERGODIC_COEFF_TOL {
        return Err(Error::ErgodicCoefficientOne);
    }
    let e = decompose(q, p)?;
    let pi_p = p.stationary_distribution()?;
    let pi_q = q.stationary_distribution()?;
    let lhs = tv_distance(&pi_p, &pi_q)?;
    let rhs = e.norm_linf() / (2.0 * (1.0 - tau));
    let mut context = BoundContext::for_n(p.n());
    context.noise_l2 = Some(e.norm_l2());
    context.noise_linf = Some(e.norm_linf());
    context.note = Some(format!("tau_1(P) = {tau:.17}"));
    Ok(BoundReport::new(BoundId::Tv, lhs, rhs, context))
}

/// End-to-end sampling error ceiling:
/// `D(pi(P), output) <= eta + ||E||_inf / (2 (1 - tau_1(P)))`.
///
/// With `output = None` the report records the ceiling only (lhs 0) and
/// notes it; the sampler's triangle verification supplies a real output.
pub fn quantum_sample_bound(
    p: &StochasticMatrix,
    q: &StochasticMatrix,
    eta: f64,
    output: Option<&Distribution>,
) -> Result<BoundReport> {
    if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
        return Err(Error::InvalidEta { eta });
    }
    require_same_n(p, q)?;
    if !p.is_ergodic() || !q.is_ergodic() {
        return Err(Error::NotErgodic);
    }
    let tau = p.ergodicity_coefficient();
    if tau >= 1.0 - ERGODIC_COEFF_TOL {
        return Err(Error::ErgodicCoefficientOne);
    }
    let e = decompose(q, p)?;
    let rhs = eta + e.norm_linf() / (2.0 * (1.0 - tau));
    let mut context = BoundContext::for_n(p.n());
    context.noise_l2 = Some(e.norm_l2());
    context.noise_linf = Some(e.norm_linf());
    let lhs = match output {
        Some(dist) => tv_distance(&p.stationary_distribution()?, dist)?,
        None => {
            context.note = Some("bound only; no sampler output supplied".to_string());
            0.0
        }
    };
    Ok(BoundReport::new(BoundId::QuantumSample, lhs, rhs, context))
}

/// What a sweep should generate and how hard it may perturb.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub n_min: usize,
    pub n_max: usize,
    pub trials: u64,
    pub magnitude: f64,
    pub seed: u64,
    /// Cap each trial's magnitude strictly below half that chain's gap,
    /// keeping the hitting check's precondition satisfied.
    pub cap_to_half_gap: bool,
    /// Generate general (non-symmetric) chains and run the TV battery
    /// instead of the symmetric spectral battery.
    pub general_chains: bool,
}

/// Per-bound tally inside a sweep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundTally {
    pub checks: u64,
    pub violations: u64,
    pub skipped: u64,
    pub min_slack: Option<f64>,
}

/// Aggregated outcome of a sweep: totals plus a per-bound breakdown keyed
/// by bound id.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub trials: u64,
    pub seed: u64,
    pub violations: u64,
    pub min_slack: Option<f64>,
    pub per_bound: BTreeMap<String, BoundTally>,
}

impl SweepSummary {
    fn record(&mut self, report: &BoundReport) {
        let tally = self
            .per_bound
            .entry(report.bound_id.as_str().to_string())
            .or_default();
        tally.checks += 1;
        if !report.pass {
            tally.violations += 1;
            self.violations += 1;
        }
        tally.min_slack = Some(match tally.min_slack {
            Some(m) => m.min(report.slack),
            None => report.slack,
        });
        self.min_slack = Some(match self.min_slack {
            Some(m) => m.min(report.slack),
            None => report.slack,
        });
    }

    fn skip(&mut self, id: BoundId) {
        self.per_bound
            .entry(id.as_str().to_string())
            .or_default()
            .skipped += 1;
    }
}

/// Runs the applicable checks over `trials` seeded random instances.
///
/// Trial `t` derives its own RNG stream from `(seed, t)`, so the summary
/// is a pure function of the [`SweepSpec`]. Checks whose preconditions
/// fail on a given instance (saturated leak, noise at the gap) are
/// counted as skipped, never as violations.
pub fn sweep(spec: &SweepSpec) -> Result<SweepSummary> {
    if spec.trials == 0 {
        return Err(Error::ZeroTrials);
    }
    if !(0.0..=1.0).contains(&spec.magnitude) || !spec.magnitude.is_finite() {
        return Err(Error::InvalidMagnitude {
            magnitude: spec.magnitude,
        });
    }
    let n_min = spec.n_min.max(2);
    let n_max = spec.n_max.max(n_min);

    let mut summary = SweepSummary {
        trials: spec.trials,
        seed: spec.seed,
        violations: 0,
        min_slack: None,
        per_bound: BTreeMap::new(),
    };

    for trial in 0..spec.trials {
        let trial_seed = derive_seed(spec.seed, trial);
        let mut rng = rng_from_seed(trial_seed);
        let n = rng.random_range(n_min..=n_max);
        if spec.general_chains {
            run_general_trial(spec, trial_seed, n, &mut rng, &mut summary)?;
        } else {
            run_symmetric_trial(spec, trial_seed, n, &mut rng, &mut summary)?;
        }
    }
    Ok(summary)
}

fn run_symmetric_trial(
    spec: &SweepSpec,
    trial_seed: u64,
    n: usize,
    rng: &mut impl Rng,
    summary: &mut SweepSummary,
) -> Result<()> {
    let p = random_symmetric_ergodic(n, rng);
    let marked = random_marked_set(n, rng);

    let mut magnitude = spec.magnitude;
    if spec.cap_to_half_gap {
        let gap = p.spectral_summary()?.gap;
        magnitude = magnitude.min(HALF_GAP_FACTOR * gap);
    }
    let noise_seed = derive_seed(trial_seed, 1);
    let (q, e) = match random_perturbation(&p, magnitude, noise_seed) {
        Ok(pair) => pair,
        Err(Error::CannotPreserveStochasticity { .. }) => {
            // Entrywise the noise never exceeds its spectral norm, so a
            // magnitude below the smallest entry always lands first draw.
            let fallback = magnitude.min(RETRY_ENTRY_FACTOR * min_entry(&p));
            random_perturbation(&p, fallback, noise_seed)?
        }
        Err(err) => return Err(err),
    };

    let stamp = |mut r: BoundReport| {
        r.context.seed = Some(trial_seed);
        r
    };
    summary.record(&stamp(check_weyl(&p, &q)?));
    summary.record(&stamp(check_gap_sandwich(&p, &q)?));
    summary.record(&stamp(check_interlacing(&e, &marked)?));
    summary.record(&stamp(check_leak_q1(&p, &q, &marked)?));
    match check_hitting(&p, &q, &marked) {
        Ok(report) => summary.record(&stamp(report)),
        Err(Error::GapDominatedByNoise { .. }) | Err(Error::SaturatedLeak { .. }) => {
            summary.skip(BoundId::Hitting)
        }
        Err(err) => return Err(err),
    }
    Ok(())
}

fn run_general_trial(
    spec: &SweepSpec,
    trial_seed: u64,
    n: usize,
    rng: &mut impl Rng,
    summary: &mut SweepSummary,
) -> Result<()> {
    let p = random_general_ergodic(n, rng);
    let noise_seed = derive_seed(trial_seed, 1);
    let (q, _e) = match random_row_perturbation(&p, spec.magnitude, noise_seed) {
        Ok(pair) => pair,
        Err(Error::CannotPreserveStochasticity { .. }) => {
            let fallback = spec.magnitude.min(RETRY_ENTRY_FACTOR * min_entry(&p));
            random_row_perturbation(&p, fallback, noise_seed)?
        }
        Err(err) => return Err(err),
    };
    match check_tv_bound(&p, &q) {
        Ok(mut report) => {
            report.context.seed = Some(trial_seed);
            summary.record(&report);
        }
        Err(Error::ErgodicCoefficientOne) => summary.skip(BoundId::Tv),
        Err(err) => return Err(err),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use approx::assert_abs_diff_eq;

    fn chain(rows: &[Vec<f64>]) -> StochasticMatrix {
        StochasticMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn weyl_is_tight_on_the_two_state_shift() {
        let p = chain(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let q = chain(&[vec![0.9, 0.1], vec![0.1, 0.9]]);
        let report = check_weyl(&p, &q).unwrap();
        assert_abs_diff_eq!(report.lhs, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(report.rhs, 0.2, epsilon = 1e-12);
        assert!(report.slack.abs() <= 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn weyl_zero_noise_is_exact() {
        let p = chain(&[vec![0.7, 0.3], vec![0.3, 0.7]]);
        let report = check_weyl(&p, &p).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert_eq!(report.rhs, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn weyl_gates_its_preconditions() {
        let p = chain(&[vec![0.7, 0.3], vec![0.3, 0.7]]);
        let asym = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let p3 = chain(&[
            vec![0.5, 0.25, 0.25],
            vec![0.25, 0.5, 0.25],
            vec![0.25, 0.25, 0.5],
        ]);
        assert!(matches!(
            check_weyl(&p, &asym),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            check_weyl(&p, &p3),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn gap_sandwich_upper_side_is_tight_on_the_worked_pair() {
        let p = chain(&[vec![0.6, 0.4], vec![0.4, 0.6]]);
        let q = chain(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let report = check_gap_sandwich(&p, &q).unwrap();
        // gap(P) = 0.8, gap(Q) = 1.0, noise norm 0.2: upper side exact.
        assert_abs_diff_eq!(report.lhs, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.rhs, 1.0, epsilon = 1e-12);
        assert!(report.slack.abs() <= 1e-12);
        assert_eq!(report.context.note.as_deref(), Some("upper side tighter"));
    }

    #[test]
    fn gap_sandwich_zero_noise_has_zero_slack() {
        let p = chain(&[vec![0.7, 0.3], vec![0.3, 0.7]]);
        let report = check_gap_sandwich(&p, &p).unwrap();
        assert!(report.slack.abs() <= 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn interlacing_on_a_hand_built_perturbation() {
        let e = Perturbation::from_matrix(Matrix::from_rows(&[vec![-0.1, 0.1], vec![0.1, -0.1]]));
        let report = check_interlacing(&e, &[1]).unwrap();
        assert_abs_diff_eq!(report.lhs, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(report.rhs, 0.2, epsilon = 1e-12);
        assert!(report.pass);
        assert_abs_diff_eq!(report.context.epsilon.unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn interlacing_rejects_degenerate_marked_sets() {
        let e = Perturbation::from_matrix(Matrix::zeros(2, 2));
        assert!(matches!(
            check_interlacing(&e, &[]),
            Err(Error::EmptyMarkedSet)
        ));
        assert!(matches!(
            check_interlacing(&e, &[0, 1]),
            Err(Error::EmptyComplement)
        ));
        assert!(matches!(
            check_interlacing(&e, &[5]),
            Err(Error::MarkedIndexOutOfRange { index: 5, n: 2 })
        ));
    }

    #[test]
    fn leak_bound_on_the_uniform_chain_is_additive_and_tight() {
        let p = StochasticMatrix::validate(Matrix::constant(4, 0.25)).unwrap();
        let report = check_leak_q1(&p, &p, &[3]).unwrap();
        assert_abs_diff_eq!(report.lhs, 0.75, epsilon = 1e-10);
        // Zero noise: additive branch is ||P_1|| itself; the gap branch
        // sits at 1 - (1)(1/4)/2 = 0.875 and stays inactive.
        assert_abs_diff_eq!(report.rhs, 0.75, epsilon = 1e-10);
        assert_eq!(
            report.context.note.as_deref(),
            Some("additive branch active")
        );
        assert!(report.pass);
    }

    #[test]
    fn leak_bound_degrades_when_noise_swallows_the_gap() {
        let p = chain(&[vec![0.95, 0.05], vec![0.05, 0.95]]);
        let q = chain(&[vec![0.8, 0.2], vec![0.2, 0.8]]);
        // gap(P) = 0.1 < ||E||_2 = 0.3: only the additive branch remains.
        let report = check_leak_q1(&p, &q, &[1]).unwrap();
        assert_abs_diff_eq!(report.lhs, 0.8, epsilon = 1e-10);
        assert_abs_diff_eq!(report.rhs, 0.95 + 0.3, epsilon = 1e-10);
        assert!(report
            .context
            .note
            .as_deref()
            .unwrap()
            .contains("dominated"));
        assert!(report.pass);
    }

    #[test]
    fn noise_free_leak_stays_below_the_gap_branch() {
        // With E = 0 the check certifies ||P_1|| <= 1 - gap * epsilon / 2
        // whenever that branch is the binding one.
        let p = chain(&[vec![0.6, 0.4], vec![0.4, 0.6]]);
        let report = check_leak_q1(&p, &p, &[1]).unwrap();
        assert_abs_diff_eq!(report.lhs, 0.6, epsilon = 1e-10);
        let gap_branch = 1.0 - 0.8 * 0.5 / 2.0;
        assert!(report.rhs <= gap_branch + 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn hitting_bound_on_the_uniform_chain() {
        let p = StochasticMatrix::validate(Matrix::constant(4, 0.25)).unwrap();
        let report = check_hitting(&p, &p, &[3]).unwrap();
        assert_abs_diff_eq!(report.lhs, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(report.rhs, 8.0f64.sqrt(), epsilon = 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn hitting_requires_gap_above_noise() {
        let p = chain(&[vec![0.95, 0.05], vec![0.05, 0.95]]);
        let q = chain(&[vec![0.8, 0.2], vec![0.2, 0.8]]);
        assert!(matches!(
            check_hitting(&p, &q, &[1]),
            Err(Error::GapDominatedByNoise { .. })
        ));
    }

    #[test]
    fn tv_bound_matches_the_worked_two_state_pair() {
        let p = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let q = chain(&[vec![0.7, 0.3], vec![0.5, 0.5]]);
        let report = check_tv_bound(&p, &q).unwrap();
        assert_abs_diff_eq!(report.lhs, 1.0 / 24.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.rhs, 1.0 / 15.0, epsilon = 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn tv_bound_is_zero_for_symmetric_pairs() {
        let p = chain(&[vec![0.7, 0.3], vec![0.3, 0.7]]);
        let q = chain(&[vec![0.6, 0.4], vec![0.4, 0.6]]);
        let report = check_tv_bound(&p, &q).unwrap();
        assert_abs_diff_eq!(report.lhs, 0.0, epsilon = 1e-12);
        assert!(report.pass);
    }

    #[test]
    fn tv_bound_rejects_a_saturated_coefficient() {
        // Ergodic (self-loop at 0, cycle through all states) but rows 1
        // and 2 have disjoint supports, so tau_1 = 1.
        let p = chain(&[
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ]);
        assert_abs_diff_eq!(p.ergodicity_coefficient(), 1.0, epsilon = 1e-15);
        assert!(matches!(
            check_tv_bound(&p, &p),
            Err(Error::ErgodicCoefficientOne)
        ));
    }

    #[test]
    fn quantum_sample_ceiling_matches_hand_arithmetic() {
        let p = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        let q = chain(&[vec![0.7, 0.3], vec![0.5, 0.5]]);
        let report = quantum_sample_bound(&p, &q, 0.01, None).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert_abs_diff_eq!(report.rhs, 23.0 / 300.0, epsilon = 1e-12);
        assert!(report
            .context
            .note
            .as_deref()
            .unwrap()
            .contains("bound only"));

        let zero = quantum_sample_bound(&p, &p, 0.0, None).unwrap();
        assert_eq!(zero.rhs, 0.0);
        assert!(zero.pass);
    }

    #[test]
    fn quantum_sample_rejects_bad_eta() {
        let p = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
        assert!(matches!(
            quantum_sample_bound(&p, &p, -0.1, None),
            Err(Error::InvalidEta { .. })
        ));
        assert!(matches!(
            quantum_sample_bound(&p, &p, f64::NAN, None),
            Err(Error::InvalidEta { .. })
        ));
    }

    #[test]
    fn symmetric_sweep_runs_clean_and_deterministically() {
        let spec = SweepSpec {
            n_min: 2,
            n_max: 8,
            trials: 25,
            magnitude: 0.05,
            seed: 20240817,
            cap_to_half_gap: true,
            general_chains: false,
        };
        let summary = sweep(&spec).unwrap();
        assert_eq!(summary.trials, 25);
        assert_eq!(summary.violations, 0);
        for id in ["weyl", "gap_sandwich", "interlacing", "leak_q1"] {
            assert_eq!(
                summary.per_bound[id].checks, 25,
                "{id} must run every trial"
            );
        }
        let hitting = &summary.per_bound["hitting"];
        assert_eq!(hitting.checks + hitting.skipped, 25);
        assert_eq!(sweep(&spec).unwrap(), summary);
    }

    #[test]
    fn general_sweep_exercises_the_tv_bound() {
        let spec = SweepSpec {
            n_min: 2,
            n_max: 8,
            trials: 25,
            magnitude: 0.02,
            seed: 7,
            cap_to_half_gap: false,
            general_chains: true,
        };
        let summary = sweep(&spec).unwrap();
        assert_eq!(summary.violations, 0);
        assert_eq!(summary.per_bound["tv"].checks, 25);
    }

    #[test]
    fn sweep_validates_its_spec() {
        let mut spec = SweepSpec {
            n_min: 2,
            n_max: 4,
            trials: 0,
            magnitude: 0.1,
            seed: 1,
            cap_to_half_gap: false,
            general_chains: false,
        };
        assert!(matches!(sweep(&spec), Err(Error::ZeroTrials)));
        spec.trials = 1;
        spec.magnitude = 1.5;
        assert!(matches!(sweep(&spec), Err(Error::InvalidMagnitude { .. })));
    }

    #[test]
    fn zero_magnitude_sweep_has_zero_noise_contexts() {
        let spec = SweepSpec {
            n_min: 3,
            n_max: 3,
            trials: 1,
            magnitude: 0.0,
            seed: 99,
            cap_to_half_gap: false,
            general_chains: false,
        };
        let summary = sweep(&spec).unwrap();
        assert_eq!(summary.violations, 0);
        // Weyl at zero noise is an exact equality, slack exactly 0.
        assert_eq!(summary.per_bound["weyl"].min_slack, Some(0.0));
    }
}
