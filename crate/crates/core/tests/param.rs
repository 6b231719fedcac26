mod common;

use common::{oracle_log_ratio, random_probs, rel_close, rng, set};
use hasfit::lattice::revlex_subsets;
use hasfit::param::{
    inverse_superset_sums, log_conditional_ratio, log_generalized_ratio,
    probabilities_from_subset_sums, subset_mobius, subset_sums, superset_sums,
};
use hasfit::{
    build_design, corner_params, extended_mean, invert_corner, mean_params, parity_split,
    Conditioning, DesignMatrix, Distribution, FeatureSet, SampleSpace, Space,
};
use num_rational::Rational64;
use proptest::prelude::*;

fn random_dist(rng: &mut impl rand::Rng, k: usize) -> Distribution {
    let ss = SampleSpace::ip(k).unwrap();
    Distribution::new(ss, random_probs(rng, ss.len())).unwrap()
}

#[test]
fn corner_inverse_is_exact_up_to_k10() {
    for k in 1..=10 {
        let s = build_design(k, Space::Ip).unwrap().to_dense().unwrap();
        let (inv_t, inv) = invert_corner(k).unwrap();
        assert!(s.mul(&inv).unwrap().is_identity(), "k={k}");
        assert!(s.transpose().mul(&inv_t).unwrap().is_identity(), "k={k}");
    }
}

#[test]
fn design_entries_match_label_computation() {
    for k in 1..=5 {
        for space in [Space::Ip, Space::Cp] {
            let d = build_design(k, space).unwrap();
            let rows: Vec<u32> = d.rows().iter().map(|r| r.mask()).collect();
            let expected = common::dense_from_labels(&rows, d.space());
            assert_eq!(d.to_dense().unwrap().row_vecs(), expected);
        }
    }
}

#[test]
fn corner_params_are_log_ratios() {
    let mut rng = rng(21);
    for i in 0..100 {
        let k = 2 + i % 4;
        let p = random_dist(&mut rng, k);
        let beta = corner_params(&p).unwrap();
        for (v, b) in beta.iter() {
            let direct = log_generalized_ratio(&p, v, Conditioning::Zero).unwrap();
            let oracle = oracle_log_ratio(p.space(), p.probs(), v.mask(), 0);
            assert!(rel_close(b, direct, 1e-10), "k={k} {v}: {b} vs {direct}");
            assert!(rel_close(b, oracle, 1e-10), "k={k} {v}: {b} vs {oracle}");
            if v.len() == 1 {
                let cell = common::position(p.space(), v.mask());
                assert!(rel_close(b, p.probs()[cell].ln(), 1e-12));
            }
        }
    }
}

#[test]
fn uniform_k3_pair_parameter_is_log7() {
    let p = Distribution::new(SampleSpace::ip(3).unwrap(), vec![1.0 / 7.0; 7]).unwrap();
    let beta = corner_params(&p).unwrap();
    for v in ["AB", "AC", "BC"] {
        assert!((beta.get(set(v)).unwrap() - 7f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn odds_ratio_invariance_k3() {
    let mut rng = rng(22);
    let full = FeatureSet::full(3);
    for _ in 0..100 {
        let p = random_dist(&mut rng, 3);
        let asr = log_generalized_ratio(&p, full, Conditioning::Zero).unwrap();
        for f in 0..3 {
            let pair = full.difference(FeatureSet::singleton(f));
            let cor = log_generalized_ratio(&p, pair, Conditioning::One).unwrap();
            let casr = log_generalized_ratio(&p, pair, Conditioning::Zero).unwrap();
            assert!(rel_close(cor - casr, asr, 1e-10));
        }
    }
}

#[test]
fn recursion_over_removed_feature() {
    let mut rng = rng(23);
    for i in 0..100 {
        let k = 3 + i % 3;
        let p = random_dist(&mut rng, k);
        let ss = p.space();
        for v in revlex_subsets(k, false).into_iter().filter(|v| v.len() > 2) {
            let whole = oracle_log_ratio(ss, p.probs(), v.mask(), 0);
            for f in v.indices() {
                let single = FeatureSet::singleton(f);
                let rest = v.difference(single);
                let cor = log_conditional_ratio(&p, rest, single).unwrap();
                let casr = log_conditional_ratio(&p, rest, FeatureSet::EMPTY).unwrap();
                assert!(rel_close(cor - casr, whole, 1e-10), "k={k} v={v} f={f}");
            }
        }
    }
}

#[test]
fn generalized_ratio_examples() {
    let ss = SampleSpace::ip(2).unwrap();
    let p1 = Distribution::new(ss, vec![0.4, 0.2, 0.4]).unwrap();
    let asr = hasfit::generalized_ratio(&p1, set("AB"), Conditioning::Zero).unwrap();
    assert!((asr - 5.0).abs() < 1e-12);
    assert!(hasfit::generalized_ratio(&p1, set("AB"), Conditioning::One).is_err());
    assert!(hasfit::generalized_ratio(&p1, set("A"), Conditioning::One).is_err());

    let ss = SampleSpace::ip(3).unwrap();
    let p: Vec<f64> = (1..=7).map(|v| f64::from(v) / 28.0).collect();
    let d = Distribution::new(ss, p.clone()).unwrap();
    // cells: 100 010 001 110 101 011 111
    let cor = hasfit::generalized_ratio(&d, set("AB"), Conditioning::One).unwrap();
    assert!(rel_close(cor, p[2] * p[6] / (p[4] * p[5]), 1e-12));
    let asr = hasfit::generalized_ratio(&d, set("ABC"), Conditioning::Zero).unwrap();
    assert!(rel_close(
        asr,
        p[6] * p[0] * p[1] * p[2] / (p[3] * p[4] * p[5]),
        1e-12
    ));
}

#[test]
fn subset_sums_round_trip_in_rationals() {
    let mut rng = rng(24);
    for k in 1..=6 {
        for space in [Space::Ip, Space::Cp] {
            let ss = SampleSpace::new(k, space).unwrap();
            let w: Vec<i64> = (0..ss.len())
                .map(|_| rand::Rng::random_range(&mut rng, 1..50))
                .collect();
            let total: i64 = w.iter().sum();
            let p: Vec<Rational64> = w.iter().map(|&v| Rational64::new(v, total)).collect();
            let design = build_design(k, space).unwrap();
            let mu = design.apply(&p).unwrap();
            let back = probabilities_from_subset_sums(ss, design.rows(), &mu);
            assert_eq!(back, p);
        }
    }
}

#[test]
fn subset_sums_round_trip_in_floats() {
    let mut rng = rng(25);
    for k in 1..=8 {
        let p = random_dist(&mut rng, k);
        let mu = mean_params(&p).unwrap();
        let back = hasfit::param::probabilities_from_mean(&mu);
        for (a, b) in back.iter().zip(p.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((mu.get(FeatureSet::full(k)).unwrap() - p.probs().last().unwrap()).abs() < 1e-15);
    }
}

#[test]
fn proportional_subset_sums_table() {
    let ss = SampleSpace::ip(2).unwrap();
    let a = DesignMatrix::new(ss, vec![set("A"), set("B")]).unwrap();
    let r = Rational64::new;
    let p1 = [r(2, 5), r(1, 5), r(2, 5)];
    let p2 = [r(11, 20), r(8, 20), r(1, 20)];
    let ap1 = a.apply(&p1).unwrap();
    let ap2 = a.apply(&p2).unwrap();
    assert_eq!(ap1, vec![r(4, 5), r(3, 5)]);
    let three: Vec<_> = ap1.iter().map(|v| v * 3).collect();
    let four: Vec<_> = ap2.iter().map(|v| v * 4).collect();
    assert_eq!(three, four);

    let e1 = extended_mean(&p1, &a, r(4, 20)).unwrap();
    let e2 = extended_mean(&p2, &a, r(3, 20)).unwrap();
    assert_eq!(e1.nu2, e2.nu2);
    // row order (A, B); listed the other way round this is (3, 4)
    assert_eq!(e1.nu2, vec![r(4, 1), r(3, 1)]);
    assert_eq!(e1.reconstruct(), ap1);
    assert_eq!(e2.reconstruct(), ap2);
}

#[test]
fn parity_split_alternating_count_up_to_k10() {
    for k in [1, 4, 10] {
        for v in revlex_subsets(k, false) {
            let split = parity_split(v, k).unwrap();
            let diff = split.same_parity.len() as i64 - split.diff_parity.len() as i64;
            let expected = if v.len() % 2 == 1 { 1 } else { -1 };
            assert_eq!(diff, expected, "{v}");
            assert_eq!(
                split.same_parity.len() + split.diff_parity.len(),
                (1 << v.len()) - 1
            );
        }
    }
}

proptest! {
    #[test]
    fn transforms_invert_each_other(k in 1usize..=8, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let a: Vec<i64> = (0..1usize << k).map(|_| rand::Rng::random_range(&mut rng, -100..100)).collect();
        let mut b = a.clone();
        superset_sums(&mut b, k);
        inverse_superset_sums(&mut b, k);
        prop_assert_eq!(&b, &a);
        subset_sums(&mut b, k);
        subset_mobius(&mut b, k);
        prop_assert_eq!(&b, &a);
    }

    #[test]
    fn superset_sum_matches_definition(k in 1usize..=6, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let a: Vec<i64> = (0..1usize << k).map(|_| rand::Rng::random_range(&mut rng, -9..10)).collect();
        let mut b = a.clone();
        superset_sums(&mut b, k);
        for v in 0..a.len() {
            let direct: i64 = (0..a.len()).filter(|w| w & v == v).map(|w| a[w]).sum();
            prop_assert_eq!(b[v], direct);
        }
    }

    #[test]
    fn mean_params_are_monotone(k in 1usize..=6, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_dist(&mut rng, k);
        let mu = mean_params(&p).unwrap();
        for (v, mv) in mu.iter() {
            prop_assert!(mv > 0.0 && mv <= 1.0 + 1e-12);
            for (w, mw) in mu.iter() {
                if v.is_subset(w) {
                    prop_assert!(mv >= mw - 1e-15);
                }
            }
        }
    }

    #[test]
    fn corner_params_reproduce_log_p(k in 1usize..=6, seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_dist(&mut rng, k);
        let beta = corner_params(&p).unwrap();
        let s = build_design(k, Space::Ip).unwrap();
        // log p = S' beta: each cell sums the parameters of its subsets
        for (j, cell) in s.cols().iter().enumerate() {
            let total: f64 = beta.iter().filter(|(v, _)| v.is_subset(cell.phi())).map(|(_, b)| b).sum();
            prop_assert!((total - p.probs()[j].ln()).abs() < 1e-10);
        }
    }
}
