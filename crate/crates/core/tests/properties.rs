use infogain_core::entropies::{h0_hmax_hr, i_max, Direction, Partition};
use infogain_core::io;
use infogain_core::linalg::{self, c};
use infogain_core::protocols::{
    merging_costs, run_binned_splitting, run_merging, run_splitting, BinStructure, SplittingVariant,
};
use infogain_core::qcore::distance::{fidelity, purified_distance};
use infogain_core::rates::{feedback_region, info_gain_state, OptimizerConfig};
use infogain_core::rng::rng_from_seed;
use infogain_core::typicality::{tensor_power, typical_projector};
use infogain_core::{CMat, ClassicallyCoherentState, DensityOperator, Measurement};
use proptest::prelude::*;
use rand::Rng as _;

fn density(seed: u64, dims: &[usize]) -> DensityOperator {
    let mut rng = rng_from_seed(seed);
    let d = dims.iter().product();
    let rank = rng.random_range(1..=d);
    DensityOperator::new(linalg::random_density(d, rank, &mut rng), dims.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn purified_distance_triangle(seed in any::<u64>(), d in 2usize..=3) {
        let r = density(seed, &[d]);
        let s = density(seed ^ 1, &[d]);
        let t = density(seed ^ 2, &[d]);
        let rs = purified_distance(&r, &s).unwrap();
        let st = purified_distance(&s, &t).unwrap();
        let rt = purified_distance(&r, &t).unwrap();
        prop_assert!(rt <= rs + st + 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&rs));
    }

    #[test]
    fn fidelity_grows_under_partial_trace(seed in any::<u64>()) {
        let r = density(seed, &[2, 2]);
        let s = density(seed.wrapping_add(17), &[2, 2]);
        let full = fidelity(&r, &s).unwrap();
        let reduced = fidelity(&r.partial_trace(&[0]).unwrap(), &s.partial_trace(&[0]).unwrap()).unwrap();
        prop_assert!(reduced >= full - 1e-9);
    }

    #[test]
    fn state_json_round_trip_is_bit_exact(seed in any::<u64>(), d in 1usize..=4) {
        let r = density(seed, &[d]);
        let back = io::state_from_json(&io::state_to_json(&r).unwrap()).unwrap();
        prop_assert_eq!(back.matrix(), r.matrix());
    }

    #[test]
    fn renyi_order(seed in any::<u64>(), d in 1usize..=4) {
        let t = h0_hmax_hr(&density(seed, &[d])).unwrap();
        prop_assert!(t.h0 >= t.h_max - 1e-9);
        prop_assert!(t.h_r >= t.h0 - 1e-9);
    }

    #[test]
    fn info_gain_state_nonnegative(seed in any::<u64>(), d in 2usize..=3, k in 1usize..=4) {
        let mut rng = rng_from_seed(seed);
        let m = Measurement::random_povm(d, k, rng.random_range(1..=d), &mut rng);
        let v = info_gain_state(&m, &density(seed ^ 5, &[d])).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!(v <= (k as f64).log2() + 1e-9);
    }

    #[test]
    fn bins_partition_outcomes(probs in prop::collection::vec(0.0f64..1.0, 2..12)) {
        let total: f64 = probs.iter().sum();
        prop_assume!(total > 1e-3);
        let p: Vec<f64> = probs.iter().map(|x| x / total).collect();
        let bins = BinStructure::new(&p).unwrap();
        let ps = bins.projectors();
        let n = p.len();
        let sum = ps.iter().fold(CMat::zeros(n, n), |a, t| a + t);
        prop_assert!(linalg::approx_eq_mat(&sum, &linalg::identity(n), 0.0));
        for (i, a) in ps.iter().enumerate() {
            for b in &ps[i + 1..] {
                prop_assert!(linalg::max_abs_entry(&(a * b)) == 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transcript_costs_match_formulas(seed in any::<u64>(), n in 2usize..=6, eps in 0.05f64..0.5) {
        let s = ClassicallyCoherentState::random(n, 1, 2, &mut rng_from_seed(seed));
        let t = run_merging(&s, eps, seed).unwrap();
        let (q, e) = merging_costs(t.h0, t.h_min, eps);
        prop_assert_eq!(t.qubits_or_bits_sent, q);
        prop_assert_eq!(t.randomness_or_entanglement_used, e);
        prop_assert!(t.achieved_error <= eps + 1e-9);
    }

    #[test]
    fn classical_splitting_is_classical(seed in any::<u64>(), n in 2usize..=5) {
        let s = ClassicallyCoherentState::random(n, 1, 2, &mut rng_from_seed(seed));
        let t = run_splitting(&s, 0.3, seed, SplittingVariant::Classical).unwrap();
        prop_assert!(t.xb_offdiagonal.unwrap() < 1e-12);
    }

    #[test]
    fn bins_have_flat_spectra(seed in any::<u64>(), n in 2usize..=8) {
        let s = ClassicallyCoherentState::random(n, 1, 2, &mut rng_from_seed(seed));
        let t = run_binned_splitting(&s, 0.2, 0.2, seed).unwrap();
        for b in &t.bins {
            // |bin| <= 2 / max p within a bin whose probabilities differ by at most 2x.
            prop_assert!(b.h0 <= b.h_min + 1.0 + 1e-9);
        }
    }

    #[test]
    fn feedback_curve_is_monotone_and_flattens(seed in any::<u64>(), k in 2usize..=4) {
        let mut rng = rng_from_seed(seed);
        let m = Measurement::random_povm(2, k, rng.random_range(1..=2), &mut rng);
        let r = feedback_region(&m, &OptimizerConfig::with_seed(3, seed));
        for w in r.curve.windows(2) {
            prop_assert!(w[0].c >= w[1].c);
        }
        for p in r.curve.iter().filter(|p| p.s >= r.sum_min - r.c_min) {
            prop_assert!((p.c - r.c_min).abs() <= 1e-12);
        }
    }

    #[test]
    fn typical_projector_commutes(seed in any::<u64>(), n in 1usize..=6, delta in 0.05f64..0.5) {
        let rho = density(seed, &[2]);
        let pi = typical_projector(&rho, n, delta).unwrap();
        let power = tensor_power(rho.matrix(), n);
        prop_assert!(linalg::max_abs_entry(&(&pi * &pi - &pi)) <= 1e-10);
        prop_assert!(linalg::hermiticity_defect(&pi) <= 1e-12);
        prop_assert!(linalg::max_abs_entry(&(&pi * &power - &power * &pi)) <= 1e-12);
    }

    #[test]
    fn max_information_subadditive(seed in any::<u64>()) {
        let r = density(seed, &[2, 2]);
        let one = i_max(&r, &Partition::first_second(), Direction::AB).unwrap().value;
        let two = DensityOperator::new(linalg::kron(r.matrix(), r.matrix()), vec![2, 2, 2, 2]).unwrap();
        let both = i_max(&two, &Partition::new(vec![0, 2], vec![1, 3]), Direction::AB).unwrap().value;
        prop_assert!(both <= 2.0 * one + 1e-6);
    }

    #[test]
    fn max_information_symmetric_for_pure_states(seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let v = linalg::random_unit_vector(4, &mut rng);
        let r = DensityOperator::new(linalg::outer(&v) * c(1.0), vec![2, 2]).unwrap();
        let ab = i_max(&r, &Partition::first_second(), Direction::AB).unwrap().value;
        let ba = i_max(&r, &Partition::first_second(), Direction::BA).unwrap().value;
        prop_assert!((ab - ba).abs() <= 1e-6);
    }
}
