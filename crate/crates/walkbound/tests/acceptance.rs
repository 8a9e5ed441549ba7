//! Acceptance battery: eleven numbered criteria, one printed pass/fail
//! line each (run with `--nocapture` to see them). Every tolerance is
//! pinned here as a named constant.
//!
//! The criteria run serialized so the timing budget of the big sweep is
//! measured on an uncontended core.

use std::sync::{Mutex, MutexGuard, OnceLock, PoisonError};
use std::time::{Duration, Instant};

use rand::Rng;

use walkbound::bounds::{
    check_gap_sandwich, check_interlacing, check_leak_q1, check_tv_bound, sweep, SweepSpec,
    SweepSummary,
};
use walkbound::gen::{
    derive_seed, min_entry, random_general_ergodic, random_marked_set, random_row_perturbation,
    random_symmetric_ergodic, rng_from_seed,
};
use walkbound::markov::StochasticMatrix;
use walkbound::matrix::{l1_norm, Matrix};
use walkbound::report::{bound_report_json, render, sweep_summary_json};
use walkbound::sampler::{build_sequence, emulate_sampling, verify_triangle};
use walkbound::szegedy::{build_walk, hitting_proxy, mark, simulate_absorption, DEFAULT_DIM_LIMIT};

/// Slack below this is a violation; BoundReport::pass uses the same value.
const SLACK_TOL: f64 = 1e-9;
/// Constructed tight cases and zero-noise collapse must close to this.
const TIGHT_TOL: f64 = 1e-12;
/// Eigenphase containment defect budget.
const PHASE_TOL: f64 = 1e-8;
/// Max-entry deviation of W^T W from the identity.
const ORTHO_TOL: f64 = 1e-10;
/// Closed-form hitting proxies on the uniform family.
const PROXY_TOL: f64 = 1e-10;
/// Wall-clock budget for the 1000-pair spectral sweep.
const BATTERY_BUDGET: Duration = Duration::from_secs(30);

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(PoisonError::into_inner)
}

/// Prints the single pass/fail line for a criterion, then asserts.
fn conclude(label: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("{label}: PASS");
    } else {
        println!("{label}: FAIL ({})", failures[0]);
    }
    assert!(failures.is_empty(), "{label}: {failures:?}");
}

/// The 1000-pair symmetric battery shared by criteria 1 and 2, timed once.
fn battery() -> &'static (SweepSummary, Duration) {
    static BATTERY: OnceLock<(SweepSummary, Duration)> = OnceLock::new();
    BATTERY.get_or_init(|| {
        let spec = SweepSpec {
            n_min: 2,
            n_max: 32,
            trials: 1000,
            magnitude: 0.1,
            seed: 20260817,
            cap_to_half_gap: false,
            general_chains: false,
        };
        let start = Instant::now();
        let summary = sweep(&spec).expect("spectral battery sweep");
        (summary, start.elapsed())
    })
}

fn chain(rows: &[Vec<f64>]) -> StochasticMatrix {
    StochasticMatrix::from_rows(rows).expect("valid test chain")
}

#[test]
fn criterion_01_eigenvalue_stability_sweep() {
    let _guard = serial();
    let (summary, elapsed) = battery();
    let mut failures = Vec::new();

    let weyl = summary.per_bound.get("weyl").expect("weyl tally");
    if weyl.checks != 1000 {
        failures.push(format!("expected 1000 weyl checks, got {}", weyl.checks));
    }
    if weyl.violations != 0 {
        failures.push(format!(
            "{} weyl violations (min slack {:?}, tolerance {SLACK_TOL})",
            weyl.violations, weyl.min_slack
        ));
    }
    if *elapsed >= BATTERY_BUDGET {
        failures.push(format!("sweep took {elapsed:?}, budget {BATTERY_BUDGET:?}"));
    }
    conclude("criterion 01 (eigenvalue stability, 1000 pairs)", failures);
}

#[test]
fn criterion_02_gap_sandwich_sweep_and_tight_case() {
    let _guard = serial();
    let (summary, _) = battery();
    let mut failures = Vec::new();

    let tally = summary.per_bound.get("gap_sandwich").expect("gap tally");
    if tally.checks != 1000 || tally.violations != 0 {
        failures.push(format!(
            "gap sandwich tally: {} checks, {} violations",
            tally.checks, tally.violations
        ));
    }

    // Flipping the lazy two-state chain to uniform moves the gap by
    // exactly the noise norm, so one side of the sandwich is an equality.
    let p = chain(&[vec![0.6, 0.4], vec![0.4, 0.6]]);
    let q = chain(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
    let tight = check_gap_sandwich(&p, &q).expect("tight case");
    if tight.slack.abs() > TIGHT_TOL {
        failures.push(format!(
            "tight case slack {} exceeds {TIGHT_TOL}",
            tight.slack
        ));
    }
    conclude("criterion 02 (gap sandwich + tight case)", failures);
}

#[test]
fn criterion_03_unmarked_block_norm_bound() {
    let _guard = serial();
    let mut failures = Vec::new();

    for trial in 0..500u64 {
        let mut rng = rng_from_seed(derive_seed(301, trial));
        let n = rng.random_range(2..=16);
        let p = random_symmetric_ergodic(n, &mut rng);
        let marked = random_marked_set(n, &mut rng);
        // Zero noise turns the leak check into the noise-free block bound.
        match check_leak_q1(&p, &p, &marked) {
            Ok(report) if report.pass => {}
            Ok(report) => failures.push(format!(
                "trial {trial}: slack {} below -{SLACK_TOL} (n = {n})",
                report.slack
            )),
            Err(err) => failures.push(format!("trial {trial}: {err}")),
        }
    }
    conclude("criterion 03 (unmarked block norm, 500 chains)", failures);
}

#[test]
fn criterion_04_submatrix_norm_interlacing() {
    let _guard = serial();
    let mut failures = Vec::new();

    for trial in 0..500u64 {
        let seed = derive_seed(401, trial);
        let mut rng = rng_from_seed(seed);
        let n = rng.random_range(2..=16);
        let p = random_symmetric_ergodic(n, &mut rng);
        let marked = random_marked_set(n, &mut rng);
        // Staying inside the smallest entry keeps the draw always valid.
        let magnitude = 0.9 * min_entry(&p);
        match random_row_perturbation(&p, magnitude, derive_seed(seed, 1)) {
            Ok((_, e)) => match check_interlacing(&e, &marked) {
                Ok(report) if report.pass => {}
                Ok(report) => failures.push(format!(
                    "trial {trial}: slack {} below -{SLACK_TOL}",
                    report.slack
                )),
                Err(err) => failures.push(format!("trial {trial}: {err}")),
            },
            Err(err) => failures.push(format!("trial {trial}: {err}")),
        }
    }
    conclude("criterion 04 (norm interlacing, 500 draws)", failures);
}

#[test]
fn criterion_05_leak_and_hitting_below_half_gap() {
    let _guard = serial();
    let mut failures = Vec::new();

    let spec = SweepSpec {
        n_min: 2,
        n_max: 16,
        trials: 500,
        magnitude: 0.1,
        seed: 501,
        cap_to_half_gap: true,
        general_chains: false,
    };
    match sweep(&spec) {
        Ok(summary) => {
            for id in ["leak_q1", "hitting"] {
                let tally = summary.per_bound.get(id).expect("tally");
                if tally.checks != 500 || tally.violations != 0 || tally.skipped != 0 {
                    failures.push(format!(
                        "{id}: {} checks, {} violations, {} skipped",
                        tally.checks, tally.violations, tally.skipped
                    ));
                }
            }
        }
        Err(err) => failures.push(format!("capped sweep: {err}")),
    }

    // Uniform chain with one marked state: the unmarked block is rank one
    // with norm (n-1)/n, so the proxy is exactly sqrt(n).
    for n in [4usize, 16, 64] {
        let p = StochasticMatrix::validate(Matrix::constant(n, 1.0 / n as f64)).unwrap();
        let part = mark(&p, &[0]).unwrap();
        let proxy = hitting_proxy(&part).unwrap();
        let expected = (n as f64).sqrt();
        if (proxy - expected).abs() > PROXY_TOL {
            failures.push(format!(
                "uniform n = {n}: proxy {proxy} differs from {expected} beyond {PROXY_TOL}"
            ));
        }
    }
    conclude("criterion 05 (leak + hitting below half gap)", failures);
}

#[test]
fn criterion_06_walk_spectral_correspondence() {
    let _guard = serial();
    let mut failures = Vec::new();

    for trial in 0..22u64 {
        let mut rng = rng_from_seed(derive_seed(601, trial));
        let n = 2 + (trial % 11) as usize;
        let p = random_symmetric_ergodic(n, &mut rng);
        let walk = build_walk(&p).expect("walk");

        let ortho = walk.orthogonality_defect();
        if ortho > ORTHO_TOL {
            failures.push(format!(
                "trial {trial}: orthogonality defect {ortho} beyond {ORTHO_TOL} (n = {n})"
            ));
        }
        let defect = walk.phase_correspondence_defect();
        if defect > PHASE_TOL {
            failures.push(format!(
                "trial {trial}: phase defect {defect} beyond {PHASE_TOL} (n = {n})"
            ));
        }
    }
    conclude(
        "criterion 06 (walk spectral correspondence, n <= 12)",
        failures,
    );
}

#[test]
fn criterion_07_stationary_tv_bound() {
    let _guard = serial();
    let mut failures = Vec::new();

    let spec = SweepSpec {
        n_min: 2,
        n_max: 16,
        trials: 500,
        magnitude: 0.05,
        seed: 701,
        cap_to_half_gap: false,
        general_chains: true,
    };
    match sweep(&spec) {
        Ok(summary) => {
            let tally = summary.per_bound.get("tv").expect("tv tally");
            if tally.checks != 500 || tally.violations != 0 {
                failures.push(format!(
                    "tv tally: {} checks, {} violations",
                    tally.checks, tally.violations
                ));
            }
        }
        Err(err) => failures.push(format!("general sweep: {err}")),
    }

    // Worked two-state pair: stationary distributions (2/3, 1/3) and
    // (5/8, 3/8) sit 1/24 apart; the contraction bound gives 1/15.
    let p = chain(&[vec![0.75, 0.25], vec![0.5, 0.5]]);
    let q = chain(&[vec![0.7, 0.3], vec![0.5, 0.5]]);
    let report = check_tv_bound(&p, &q).expect("worked pair");
    if (report.lhs - 1.0 / 24.0).abs() > TIGHT_TOL {
        failures.push(format!("worked lhs {} differs from 1/24", report.lhs));
    }
    if (report.rhs - 1.0 / 15.0).abs() > TIGHT_TOL {
        failures.push(format!("worked rhs {} differs from 1/15", report.rhs));
    }
    conclude("criterion 07 (stationary TV bound, 500 pairs)", failures);
}

#[test]
fn criterion_08_contraction_coefficient_vertex_oracle() {
    let _guard = serial();
    let mut failures = Vec::new();

    // The sup of ||v P||_1 over the zero-sum l1 ball is attained at a
    // vertex (e_i - e_j) / 2; evaluating the matrix action literally there
    // must agree with the closed form bit for bit, because halving is
    // exact in binary floating point.
    fn vertex_oracle(p: &StochasticMatrix) -> f64 {
        let n = p.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut v = vec![0.0; n];
                v[i] = 0.5;
                v[j] = -0.5;
                worst = worst.max(l1_norm(&p.matrix().vec_mul(&v)));
            }
        }
        worst
    }

    for trial in 0..100u64 {
        let mut rng = rng_from_seed(derive_seed(801, trial));
        let n = rng.random_range(2..=8);
        let p = random_general_ergodic(n, &mut rng);
        let closed = p.ergodicity_coefficient();
        let oracle = vertex_oracle(&p);
        if closed != oracle {
            failures.push(format!(
                "trial {trial}: closed form {closed:e} != oracle {oracle:e} (n = {n})"
            ));
        }
    }
    conclude(
        "criterion 08 (contraction vertex oracle, 100 matrices)",
        failures,
    );
}

#[test]
fn criterion_09_sampling_triangle_bound() {
    let _guard = serial();
    let mut failures = Vec::new();

    for trial in 0..200u64 {
        let seed = derive_seed(901, trial);
        let mut rng = rng_from_seed(seed);
        let n = rng.random_range(2..=8);
        let p = random_general_ergodic(n, &mut rng);
        let q = random_general_ergodic(n, &mut rng);
        let eta = if trial == 0 {
            0.0
        } else {
            0.1 * rng.random::<f64>()
        };
        let outcome = build_sequence(&q, 4)
            .and_then(|seq| emulate_sampling(&seq, eta, derive_seed(seed, 1)))
            .and_then(|sample| verify_triangle(&p, &q, &sample));
        match outcome {
            Ok(report) if report.pass => {}
            Ok(report) => failures.push(format!(
                "trial {trial}: slack {} below -{SLACK_TOL}",
                report.slack
            )),
            Err(err) => failures.push(format!("trial {trial}: {err}")),
        }
    }

    // Symmetric pairs share the uniform stationary distribution, so the
    // distance term vanishes and the measured lhs is the emulation error
    // itself, never above eta.
    for trial in 0..20u64 {
        let seed = derive_seed(911, trial);
        let mut rng = rng_from_seed(seed);
        let n = rng.random_range(2..=8);
        let p = random_symmetric_ergodic(n, &mut rng);
        let q = random_symmetric_ergodic(n, &mut rng);
        let eta = 0.1 * rng.random::<f64>();
        let outcome = build_sequence(&q, 4)
            .and_then(|seq| emulate_sampling(&seq, eta, derive_seed(seed, 1)))
            .and_then(|sample| verify_triangle(&p, &q, &sample));
        match outcome {
            Ok(report) if report.lhs <= eta => {}
            Ok(report) => failures.push(format!(
                "symmetric trial {trial}: lhs {} above eta {eta}",
                report.lhs
            )),
            Err(err) => failures.push(format!("symmetric trial {trial}: {err}")),
        }
    }
    conclude("criterion 09 (sampling triangle bound, 200 runs)", failures);
}

#[test]
fn criterion_10_byte_identical_reruns() {
    let _guard = serial();
    let mut failures = Vec::new();

    let spec = SweepSpec {
        n_min: 2,
        n_max: 12,
        trials: 50,
        magnitude: 0.05,
        seed: 99,
        cap_to_half_gap: false,
        general_chains: false,
    };
    let first = render(&sweep_summary_json(&sweep(&spec).unwrap()));
    let second = render(&sweep_summary_json(&sweep(&spec).unwrap()));
    if first != second {
        failures.push("sweep reruns rendered differently".to_string());
    }

    let mut rng = rng_from_seed(1001);
    let p = random_general_ergodic(5, &mut rng);
    let q = random_general_ergodic(5, &mut rng);
    let run = || {
        let seq = build_sequence(&q, 6).unwrap();
        let sample = emulate_sampling(&seq, 0.05, 31).unwrap();
        let report = verify_triangle(&p, &q, &sample).unwrap();
        (
            sample.output().weights().to_vec(),
            render(&bound_report_json(&report)),
        )
    };
    let (out_a, json_a) = run();
    let (out_b, json_b) = run();
    if out_a != out_b {
        failures.push("emulation outputs differ between reruns".to_string());
    }
    if json_a != json_b {
        failures.push("emulation reports rendered differently".to_string());
    }
    conclude("criterion 10 (byte-identical seeded reruns)", failures);
}

#[test]
fn criterion_11_zero_noise_collapse() {
    let _guard = serial();
    let mut failures = Vec::new();

    let mut rng = rng_from_seed(1101);
    let p = random_symmetric_ergodic(6, &mut rng);
    // Re-validate the same entries so q carries no shared caches and every
    // quantity below is genuinely recomputed.
    let q = StochasticMatrix::validate(p.matrix().clone()).unwrap();

    let gap_p = p.spectral_summary().unwrap().gap;
    let gap_q = q.spectral_summary().unwrap().gap;
    if (gap_p - gap_q).abs() > TIGHT_TOL {
        failures.push(format!("gaps differ: {gap_p} vs {gap_q}"));
    }

    let marked = vec![4, 5];
    let part_p = mark(&p, &marked).unwrap();
    let part_q = mark(&q, &marked).unwrap();
    let leak_p = walkbound::szegedy::leak_norm(&part_p);
    let leak_q = walkbound::szegedy::leak_norm(&part_q);
    if (leak_p - leak_q).abs() > TIGHT_TOL {
        failures.push(format!("leak norms differ: {leak_p} vs {leak_q}"));
    }

    let tv = check_tv_bound(&p, &q).unwrap();
    if tv.lhs > TIGHT_TOL {
        failures.push(format!("stationary TV {} above {TIGHT_TOL}", tv.lhs));
    }

    let curve_p = simulate_absorption(&part_p, 12, DEFAULT_DIM_LIMIT).unwrap();
    let curve_q = simulate_absorption(&part_q, 12, DEFAULT_DIM_LIMIT).unwrap();
    let worst = curve_p
        .iter()
        .zip(&curve_q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if curve_p.len() != curve_q.len() || worst > TIGHT_TOL {
        failures.push(format!("absorption curves differ by {worst}"));
    }
    conclude("criterion 11 (zero-noise collapse)", failures);
}
