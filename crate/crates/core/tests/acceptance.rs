//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

mod common;

use std::time::{Duration, Instant};

use infogain_core::entropies::aep::{aep_correction, AepQuantity};
use infogain_core::entropies::one_shot::{d_max, verify_d_max, verify_h_min, verify_i_max};
use infogain_core::entropies::{h_min_cond, i_max, Direction, Partition};
use infogain_core::linalg::{self, c};
use infogain_core::protocols::{extractor_deviation, merging_costs, round_trip, run_merging, ExtractorMode};
use infogain_core::rates::{
    default_w_cap, feedback_region, groenewold, info_gain, info_gain_state, nonfeedback_region, OptimizerConfig,
    RateRegion,
};
use infogain_core::rng::rng_from_seed;
use infogain_core::typicality::{tensor_power, typical_projector, verify_typicality_properties, TypicalSpec};
use infogain_core::verify::{run_suite, Suite, SuiteConfig, SuiteReport};
use infogain_core::{CMat, ClassicallyCoherentState, DensityOperator, Measurement};
use rand::Rng as _;
use statrs::distribution::{Binomial, Discrete};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn state(m: CMat, dims: Vec<usize>) -> DensityOperator {
    DensityOperator::new(m, dims).expect("valid state")
}

fn suite_summary(r: &SuiteReport) -> String {
    r.invariants
        .iter()
        .map(|i| format!("{} {}/{} (worst margin {:.2e})", i.name, i.passed, i.trials, i.worst_margin))
        .collect::<Vec<_>>()
        .join("; ")
}

fn info_gain_endpoints() -> Outcome {
    let start = Instant::now();
    let cfg = OptimizerConfig::default();
    let comp = info_gain(&Measurement::computational(2), &cfg).value;
    let trivial = info_gain(&Measurement::trivial(2), &cfg).value;
    let elapsed = start.elapsed();
    ensure(
        (comp - 1.0).abs() <= 1e-4 && trivial.abs() <= 1e-9 && elapsed < Duration::from_secs(60),
        format!("computational {comp:.6}, trivial {trivial:.1e}, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn groenewold_agreement() -> Outcome {
    let mut rng = rng_from_seed(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = Measurement::random_efficient(2, rng.random_range(2..=4), &mut rng);
        let rho = state(linalg::random_density(2, rng.random_range(1..=2), &mut rng), vec![2]);
        worst = worst.max((groenewold(&m, &rho).unwrap().value - info_gain_state(&m, &rho).unwrap()).abs());
    }
    // One outcome with Kraus operators 1/sqrt 2 and X/sqrt 2 acting on |0>.
    let s = c(std::f64::consts::FRAC_1_SQRT_2);
    let mut x = CMat::zeros(2, 2);
    x[(0, 1)] = s;
    x[(1, 0)] = s;
    let noisy = Measurement::new(vec!["0".into()], vec![vec![linalg::identity(2) * s, x]]).unwrap();
    let zero = state(linalg::projector(2, 0), vec![2]);
    let g = groenewold(&noisy, &zero).unwrap().value;
    let i = info_gain_state(&noisy, &zero).unwrap();
    ensure(
        worst <= 1e-8 && g < -1e-3 && i >= 0.0,
        format!("max |difference| {worst:.1e}; inefficient instrument: entropy reduction {g:.4}, I(X:R) {i:.1e}"),
    )
}

fn curve_follows_formula(r: &RateRegion) -> f64 {
    r.curve.iter().map(|p| (p.c - r.c_min.max(r.sum_min - p.s)).abs()).fold(0.0, f64::max)
}

fn feedback_shape() -> Outcome {
    let cfg = OptimizerConfig::default();
    let comp = feedback_region(&Measurement::computational(2), &cfg);
    let flat = comp.curve.iter().map(|p| (p.c - 1.0).abs()).fold(0.0, f64::max);
    let mut rng = rng_from_seed(3);
    let mut formula = curve_follows_formula(&comp);
    let mut points_ok = comp.curve.len() == 33;
    let mut below_gain = 0.0f64;
    for _ in 0..5 {
        let m = Measurement::random_povm(2, rng.random_range(2..=4), rng.random_range(1..=2), &mut rng);
        let r = feedback_region(&m, &cfg);
        formula = formula.max(curve_follows_formula(&r));
        points_ok &= r.curve.len() == 33;
        // The minimal communication rate dominates I(X:R) at every input.
        for _ in 0..20 {
            let rho = state(linalg::random_density(2, 2, &mut rng), vec![2]);
            below_gain = below_gain.max(info_gain_state(&m, &rho).unwrap() - r.c_min);
        }
    }
    ensure(
        points_ok && formula <= 1e-4 && flat <= 1e-4 && below_gain <= 1e-9,
        format!("33 points each; formula deviation {formula:.1e}; computational curve off 1 bit by {flat:.1e}"),
    )
}

fn pointwise_gap(nf: &RateRegion, fb: &RateRegion) -> (f64, f64) {
    let mut above: f64 = f64::NEG_INFINITY;
    let mut diff: f64 = 0.0;
    for s in nf.curve.iter().map(|p| p.s).chain(fb.curve.iter().map(|p| p.s)) {
        let d = nf.rate_at(s) - fb.rate_at(s);
        above = above.max(d);
        diff = diff.max(d.abs());
    }
    (above, diff)
}

fn nonfeedback_consistency() -> Outcome {
    let cfg = OptimizerConfig::default();
    let mut rng = rng_from_seed(4);
    let m = Measurement::random_povm(2, 3, 1, &mut rng);
    let fb = feedback_region(&m, &cfg);
    let nf = nonfeedback_region(&m, default_w_cap(&m), true, &cfg).unwrap();
    let (_, rank_one_diff) = pointwise_gap(&nf, &fb);
    let mut worst_above = f64::NEG_INFINITY;
    let mut others = vec![Measurement::computational(2), Measurement::trine()];
    for _ in 0..4 {
        others.push(Measurement::random_povm(2, rng.random_range(2..=4), 2, &mut rng));
    }
    others.push(Measurement::random_povm(3, 3, 2, &mut rng));
    for m in &others {
        let fb = feedback_region(m, &cfg);
        let nf = nonfeedback_region(m, default_w_cap(m), true, &cfg).unwrap();
        worst_above = worst_above.max(pointwise_gap(&nf, &fb).0);
    }
    ensure(
        rank_one_diff <= 1e-3 && worst_above <= 1e-6,
        format!(
            "rank-one |nf - fb| {rank_one_diff:.1e}; max(nf - fb) over {} measurements {worst_above:.1e}",
            others.len()
        ),
    )
}

/// `rho_XR` blocks `p_x |v_x><v_x|` built directly from the state's data.
fn cq_matrix(s: &ClassicallyCoherentState) -> CMat {
    let n = s.probs().len();
    let r = s.ref_dim();
    let mut m = CMat::zeros(n * r, n * r);
    for (x, v) in s.vectors().iter().enumerate() {
        let blk = v * v.adjoint() * c(s.probs()[x]);
        m.view_mut((x * r, x * r), (r, r)).copy_from(&blk);
    }
    m
}

fn ceil_floor_consistent(value: f64, got: i64, ceil: bool) -> bool {
    let expect = if ceil { value.ceil() } else { value.floor() } as i64;
    got == expect || (value - value.round()).abs() < 1e-5 && (got - value.round() as i64).abs() <= 1
}

fn merging_end_to_end() -> Outcome {
    let start = Instant::now();
    let eps = 0.25;
    let mut rng = rng_from_seed(5);
    let (mut worst_err, mut worst_rt, mut bad_cost) = (0.0f64, 0.0f64, 0);
    for trial in 0..50 {
        let s = ClassicallyCoherentState::random(8, 1, 2, &mut rng);
        let t = run_merging(&s, eps, trial).map_err(|e| format!("trial {trial}: {e}"))?;
        let h0 = (s.probs().iter().filter(|&&p| p > 0.0).count() as f64).log2();
        let hmin = common::h_min_oracle(&cq_matrix(&s), 8);
        let slack = 4.0 * (1.0 / eps).log2();
        let (q, e) = merging_costs(t.h0, t.h_min, eps);
        if t.qubits_or_bits_sent != q
            || t.randomness_or_entanglement_used != e
            || !ceil_floor_consistent(h0 - hmin + slack, q, true)
            || !ceil_floor_consistent(hmin - slack, e, false)
        {
            bad_cost += 1;
        }
        worst_err = worst_err.max(t.achieved_error);
        worst_rt = worst_rt.max(round_trip(&s, eps, trial).unwrap().round_trip_error);
    }
    let elapsed = start.elapsed();
    ensure(
        worst_err <= eps && worst_rt <= 0.5 && bad_cost == 0 && elapsed < Duration::from_secs(300),
        format!(
            "max error {worst_err:.4}, max round trip {worst_rt:.4}, cost mismatches {bad_cost}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Exact permutation average of the extractor deviation, computed from scratch.
fn extractor_oracle(s: &ClassicallyCoherentState, n1: usize) -> f64 {
    let n = s.probs().len();
    let n2 = n / n1;
    let blocks: Vec<CMat> = s.vectors().iter().zip(s.probs()).map(|(v, &p)| v * v.adjoint() * c(p)).collect();
    let rho_r = blocks.iter().fold(CMat::zeros(2, 2), |a, b| a + b);
    let perms = common::permutations(n);
    let total: f64 = perms
        .iter()
        .map(|pi| {
            (0..n1)
                .map(|x1| {
                    let part = (0..n).filter(|&x| pi[x] / n2 == x1).fold(CMat::zeros(2, 2), |a, x| a + &blocks[x]);
                    common::trace_norm(&(part - &rho_r / c(n1 as f64)))
                })
                .sum::<f64>()
        })
        .sum();
    total / perms.len() as f64
}

fn extractor_exact() -> Outcome {
    let mut rng = rng_from_seed(6);
    let (mut violations, mut mismatch) = (0, 0.0f64);
    let mut worst_ratio = 0.0f64;
    for &n in &[4usize, 6] {
        for _ in 0..20 {
            let s = ClassicallyCoherentState::random(n, 1, 2, &mut rng);
            let r = extractor_deviation(&s.x_ref_state(), 2, ExtractorMode::Exact).unwrap();
            let bound = (2.0 * 2f64.powf(-common::h_min_oracle(&cq_matrix(&s), n))).sqrt();
            mismatch = mismatch.max((r.average - extractor_oracle(&s, 2)).abs());
            worst_ratio = worst_ratio.max(r.average / bound);
            if r.average > bound + 1e-9 || !r.within_bound {
                violations += 1;
            }
        }
    }
    ensure(
        violations == 0 && mismatch <= 1e-9,
        format!(
            "40 states, violations {violations}, worst average/bound {worst_ratio:.3}, oracle mismatch {mismatch:.1e}"
        ),
    )
}

fn sandwich() -> Outcome {
    let r = run_suite(Suite::ProtocolsSandwich, &SuiteConfig { seed: 7, scale: 1.0 }).unwrap();
    let s = r.invariant("sandwich").unwrap();
    ensure(s.trials == 50 && s.pass() && r.all_pass, suite_summary(&r))
}

fn solver_certification() -> Outcome {
    let mut rng = rng_from_seed(8);
    let ab = Partition::first_second();
    let mut failures = 0;
    for _ in 0..500 {
        let db = rng.random_range(2..=3);
        let d = 2 * db;
        let rho = state(linalg::random_density(d, rng.random_range(1..=d), &mut rng), vec![2, db]);
        let sigma = state(linalg::random_density(d, rng.random_range(1..=d), &mut rng), vec![2, db]);
        let dm = d_max(&rho, &sigma).unwrap();
        let dm_ok = dm.is_infinite() || verify_d_max(&rho, &sigma, &dm).passes();
        let hm = h_min_cond(&rho, &ab).unwrap();
        let im = i_max(&rho, &ab, Direction::AB).unwrap();
        let ok = dm_ok
            && verify_h_min(&rho, &ab, &hm).unwrap().passes()
            && verify_i_max(&rho, &ab, Direction::AB, &im).unwrap().passes();
        if !ok {
            failures += 1;
        }
    }
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = linalg::random_density(4, rng.random_range(3..=4), &mut rng);
        let rho = state(m.clone(), vec![2, 2]);
        worst = worst.max((h_min_cond(&rho, &ab).unwrap().value - common::h_min_oracle(&m, 2)).abs());
        worst = worst.max((i_max(&rho, &ab, Direction::AB).unwrap().value - common::i_max_oracle(&m, 2)).abs());
    }
    ensure(
        failures == 0 && worst <= 1e-5,
        format!("500 instances, {failures} certificate failures; max |solver - grid oracle| {worst:.1e}"),
    )
}

fn lemma_suite() -> Outcome {
    let r = run_suite(Suite::AppendixLemmas, &SuiteConfig::default()).unwrap();
    let ok = r.invariants.len() == 12 && r.invariants.iter().all(|i| i.trials == 500);
    ensure(ok && r.all_pass, suite_summary(&r))
}

fn uncertainty() -> Outcome {
    let r = run_suite(Suite::Uncertainty, &SuiteConfig::default()).unwrap();
    ensure(r.invariants[0].trials == 1000 && r.all_pass, suite_summary(&r))
}

fn typicality() -> Outcome {
    let (p, n, delta) = (0.3, 1000usize, 0.05);
    let binom = Binomial::new(p, n as u64).unwrap();
    let exact: f64 = (0..=n)
        .filter(|&k| {
            let f = k as f64 / n as f64;
            (f - p).abs() <= delta + 1e-12 && ((1.0 - f) - (1.0 - p)).abs() <= delta + 1e-12
        })
        .map(|k| binom.pmf(k as u64))
        .sum();
    let spec = TypicalSpec::new(vec![p, 1.0 - p], n, delta).unwrap();
    let lib = spec.probability().unwrap();

    // Sandwich in the eigenbasis at n = 10: Pi rho^{(x)10} Pi is diagonal and
    // every typical entry lies within 2^{-n(S -+ c delta)}.
    let m = 10;
    let rho = state(linalg::diag_real(&[p, 1.0 - p]), vec![2]);
    let report = verify_typicality_properties(&TypicalSpec::for_state(&rho, m, delta).unwrap(), 0.5).unwrap();
    let pi = typical_projector(&rho, m, delta).unwrap();
    let sandwich = &pi * tensor_power(rho.matrix(), m) * &pi;
    let s = -(p * p.log2() + (1.0 - p) * (1.0 - p).log2());
    let (lo, hi) = (2f64.powf(-(m as f64) * (s + report.c * delta)), 2f64.powf(-(m as f64) * (s - report.c * delta)));
    let mut entry_fail = 0;
    for i in 0..sandwich.nrows() {
        for j in 0..sandwich.ncols() {
            let v = sandwich[(i, j)];
            let ok = if i != j {
                v.norm() <= 1e-14
            } else if pi[(i, i)].re > 0.5 {
                v.re >= lo * (1.0 - 1e-9) && v.re <= hi * (1.0 + 1e-9)
            } else {
                v.norm() <= 1e-14
            };
            if !ok {
                entry_fail += 1;
            }
        }
    }
    let rotated = run_suite(Suite::Typicality, &SuiteConfig { seed: 11, scale: 1.0 }).unwrap();
    let rotated_ok = rotated.invariant("projector_sandwich").is_some_and(|r| r.pass());
    ensure(
        exact >= 0.99 && (exact - lib).abs() <= 1e-10 && entry_fail == 0 && rotated_ok && rotated.all_pass,
        format!(
            "Pr[typical] = {exact:.6} (library {lib:.6}); n = 10 sandwich entry failures {entry_fail}, c = {:.4}; {}",
            report.c,
            suite_summary(&rotated)
        ),
    )
}

fn tensor_power_sanity() -> Outcome {
    let mut rng = rng_from_seed(12);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let m = linalg::random_density(4, rng.random_range(1..=4), &mut rng);
        let single = i_max(&state(m.clone(), vec![2, 2]), &Partition::first_second(), Direction::AB).unwrap().value;
        let two = state(linalg::kron(&m, &m), vec![2, 2, 2, 2]);
        let double = i_max(&two, &Partition::new(vec![0, 2], vec![1, 3]), Direction::AB).unwrap().value;
        worst = worst.max(double - 2.0 * single);
    }
    let mut monotone = true;
    for q in [AepQuantity::MaxInformation, AepQuantity::MaxEntropy] {
        for eps in [0.01, 0.1, 0.5] {
            let vals: Vec<f64> = (4..=64).map(|n| aep_correction(eps, n, 2, q).unwrap()).collect();
            monotone &= vals.windows(2).all(|w| w[1] < w[0]);
        }
    }
    ensure(
        worst <= 1e-6 && monotone,
        format!("max I_max(rho^2) - 2 I_max(rho) = {worst:.1e}; corrections decreasing for n = 4..64: {monotone}"),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("information gain endpoints", info_gain_endpoints),
        ("entropy reduction agreement", groenewold_agreement),
        ("feedback region shape", feedback_shape),
        ("non-feedback consistency", nonfeedback_consistency),
        ("merging and splitting end to end", merging_end_to_end),
        ("extractor bound, exact average", extractor_exact),
        ("achievability and converse sandwich", sandwich),
        ("entropy solver certificates", solver_certification),
        ("one-shot lemma suite", lemma_suite),
        ("uncertainty relation", uncertainty),
        ("typicality", typicality),
        ("tensor power sanity", tensor_power_sanity),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or(e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("PASS {:>2} {name} [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
