//! Properties of the probability core and the common part.

mod common;

use approx::assert_abs_diff_eq;
use bcrk::common_part::{common_identity_residual, SourceSpec};
use bcrk::prob_core::{csiszar_identity_residuals, Alphabet, ConditionalPmf, JointPmf};
use bcrk::search::restart_rng;
use bcrk::simplex::sample_uniform;
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn random_joint(seed: u64, names: &[&str], max_size: usize) -> JointPmf {
    let mut rng = restart_rng(seed, 3);
    let axes: Vec<Alphabet> = names
        .iter()
        .map(|n| Alphabet::new(*n, rng.random_range(1..=max_size)).unwrap())
        .collect();
    let cells: usize = axes.iter().map(Alphabet::size).product();
    JointPmf::new(axes, sample_uniform(cells, &mut rng)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn information_measures_match_oracle(seed in any::<u64>()) {
        let j = random_joint(seed, &["A", "B", "C"], 3);
        let sizes = j.sizes();
        let t = j.table();
        let lib = j.info_measure(&["A"], &["B"], &["C"]).unwrap();
        prop_assert!((lib - mi(t, &sizes, &[0], &[1], &[2])).abs() < 1e-12);
        let lib = j.entropy(&["A", "C"], &[]).unwrap();
        prop_assert!((lib - h_of(t, &sizes, &[0, 2])).abs() < 1e-12);
    }

    #[test]
    fn chain_rule(seed in any::<u64>()) {
        let j = random_joint(seed, &["A", "B", "C"], 4);
        let hab = j.entropy(&["A", "B"], &["C"]).unwrap();
        let split = j.entropy(&["A"], &["C"]).unwrap() + j.entropy(&["B"], &["A", "C"]).unwrap();
        prop_assert!((hab - split).abs() < 1e-12);
        let iab = j.info_measure(&["A"], &["B", "C"], &[]).unwrap();
        let split = j.info_measure(&["A"], &["C"], &[]).unwrap() + j.info_measure(&["A"], &["B"], &["C"]).unwrap();
        prop_assert!((iab - split).abs() < 1e-12);
    }

    #[test]
    fn data_processing(seed in any::<u64>()) {
        let mut rng = restart_rng(seed, 5);
        let (na, nb, nc) = (rng.random_range(2..=4), rng.random_range(2..=4), rng.random_range(2..=4));
        let a = Alphabet::new("A", na).unwrap();
        let b = Alphabet::new("B", nb).unwrap();
        let c = Alphabet::new("C", nc).unwrap();
        let pa = JointPmf::new(vec![a.clone()], sample_uniform(na, &mut rng)).unwrap();
        let ab = ConditionalPmf::new(vec![a], vec![b.clone()], (0..na).flat_map(|_| sample_uniform(nb, &mut rng)).collect()).unwrap();
        let bc = ConditionalPmf::new(vec![b], vec![c], (0..nb).flat_map(|_| sample_uniform(nc, &mut rng)).collect()).unwrap();
        let j = pa.chain_compose(&ab).unwrap().chain_compose(&bc).unwrap();
        let iab = j.info_measure(&["A"], &["B"], &[]).unwrap();
        let iac = j.info_measure(&["A"], &["C"], &[]).unwrap();
        prop_assert!(iac <= iab + 1e-12);
        prop_assert!(j.info_measure(&["A"], &["C"], &["B"]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn csiszar_residuals_vanish(seed in any::<u64>()) {
        let mut rng = restart_rng(seed, 7);
        let n = rng.random_range(1..=3);
        let ys: Vec<String> = (1..=n).map(|i| format!("Y{i}")).collect();
        let zs: Vec<String> = (1..=n).map(|i| format!("Z{i}")).collect();
        let mut axes = vec![Alphabet::new("W", rng.random_range(1..=3)).unwrap()];
        for name in ys.iter().chain(&zs) {
            axes.push(Alphabet::new(name, 2).unwrap());
        }
        let cells: usize = axes.iter().map(Alphabet::size).product();
        let j = JointPmf::new(axes, sample_uniform(cells, &mut rng)).unwrap();
        let y: Vec<&str> = ys.iter().map(String::as_str).collect();
        let z: Vec<&str> = zs.iter().map(String::as_str).collect();
        let (r1, r2) = csiszar_identity_residuals(&j, &["W"], &y, &z).unwrap();
        prop_assert!(r1 < 1e-9 && r2 < 1e-9, "{} {}", r1, r2);
    }

    #[test]
    fn common_part_is_maximal(seed in any::<u64>()) {
        let src = random_source(seed, 4);
        let (s, t) = (src.s_alpha().size(), src.t_alpha().size());
        let oracle = brute_force_common_entropy(src.pst().table(), s, t);
        prop_assert!((src.entropies().hk - oracle).abs() < 1e-12);
        prop_assert!(src.is_consistent());
        prop_assert!(common_identity_residual(&src) < 1e-9);
    }
}

#[test]
fn common_part_of_block_diagonal_source() {
    // two blocks, the second one fully correlated
    let p = vec![0.1, 0.2, 0.0, 0.3, 0.1, 0.0, 0.0, 0.0, 0.3];
    let src = SourceSpec::from_table(3, 3, p).unwrap();
    assert_eq!(src.k_alpha().size(), 2);
    assert_abs_diff_eq!(src.entropies().hk, hb(0.3), epsilon = 1e-12);
    assert!(!src.is_markov());
}

#[test]
fn set_partition_counts() {
    let bell: Vec<usize> = (1..=5).map(|n| set_partitions(n).len()).collect();
    assert_eq!(bell, vec![1, 2, 5, 15, 52]);
}
