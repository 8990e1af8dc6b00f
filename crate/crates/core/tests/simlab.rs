use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secondorder::gm::Zeta;
use secondorder::probkit::{Alphabet, CondKernel, ProbVec, RealFunc};
use secondorder::rdsolver::{CodingInstance, LossySc};
use secondorder::simlab::{
    gcc_counts, gcc_sample, pml_select, simulate, type_deviation, Codebook, SimConfig, ENUMERATION_LIMIT,
};

fn hamming(size: usize) -> RealFunc {
    RealFunc::from_fn(vec![Alphabet::indexed("X", size), Alphabet::indexed("Z", size)], |i| (i[0] != i[1]) as u8 as f64)
        .unwrap()
}

fn lossy(level: f64) -> CodingInstance {
    CodingInstance::LossySC(LossySc {
        source: ProbVec::new(Alphabet::indexed("X", 2), vec![0.3, 0.7]).unwrap(),
        distortion: hamming(2),
        level,
        test_channel: None,
        lambda: None,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn codebook_scores_are_addressable(seed in any::<u64>(), stream in 0u64..1000, keys in prop::collection::btree_set(0u64..5000, 1..20)) {
        let book = Codebook::new(seed, stream, 5000).unwrap();
        let keys: Vec<u64> = keys.into_iter().collect();
        let direct: Vec<f64> = keys.iter().map(|&k| book.score(k)).collect();
        let skipped: Vec<f64> = book.scores_at(keys.clone()).collect();
        prop_assert_eq!(&direct, &skipped);
        let again = Codebook::new(seed, stream, 5000).unwrap();
        prop_assert_eq!(direct, keys.iter().map(|&k| again.score(k)).collect::<Vec<_>>());
        prop_assert!(keys.iter().all(|&k| book.score(k) > 0.0));
    }

    #[test]
    fn conditional_counts_fill_each_row(
        counts in prop::collection::vec(1usize..60, 3),
        rows in prop::collection::vec(prop::collection::vec(0.05f64..1.0, 2), 3),
    ) {
        let kernel: Vec<f64> = rows.iter().flat_map(|r| { let s: f64 = r.iter().sum(); r.iter().map(move |v| v / s) }).collect();
        let n: usize = counts.iter().sum();
        let px: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let out = gcc_counts(&px, &kernel, 2, &Zeta::zero(3, 2), &counts).unwrap();
        for x in 0..3 {
            prop_assert_eq!(out[2 * x] + out[2 * x + 1], counts[x]);
            // Largest-remainder rounding moves each cell by less than one.
            prop_assert!((out[2 * x] as f64 - kernel[2 * x] * counts[x] as f64).abs() < 1.0);
        }
    }

    #[test]
    fn type_deviation_sums_to_zero(counts in prop::collection::vec(0usize..50, 2..6)) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let px = vec![1.0 / counts.len() as f64; counts.len()];
        prop_assert!(type_deviation(&px, &counts).iter().sum::<f64>().abs() < 1e-9);
    }
}

#[test]
fn poisson_selection_has_the_weight_law() {
    let weights = [0.1, 0.2, 0.3, 0.4];
    let trials = 40_000u64;
    let mut hits = [0u64; 4];
    for t in 0..trials {
        let book = Codebook::new(17, t, 4).unwrap();
        let pick = pml_select(&book, weights.iter().enumerate().map(|(k, &w)| (k as u64, w))).unwrap();
        hits[pick.key as usize] += 1;
    }
    for (k, &w) in weights.iter().enumerate() {
        let freq = hits[k] as f64 / trials as f64;
        let se = (w * (1.0 - w) / trials as f64).sqrt();
        assert!((freq - w).abs() < 4.0 * se, "key {k}: {freq} vs {w}");
    }
}

#[test]
fn conditional_types_ignore_input_order() {
    let xa = Alphabet::indexed("X", 2);
    let joint = ProbVec::new(xa.clone(), vec![0.5, 0.5])
        .unwrap()
        .as_func()
        .semidirect(&CondKernel::new(xa, Alphabet::indexed("U", 2), vec![0.8, 0.2, 0.3, 0.7]).unwrap().as_func())
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xs: Vec<usize> = (0..100).map(|_| rng.gen_range(0..2)).collect();
    let mut perm: Vec<usize> = (0..100).collect();
    perm.sort_by_key(|&i| (xs[i], 100 - i));
    let permuted: Vec<usize> = perm.iter().map(|&i| xs[i]).collect();
    let table = |x: &[usize], u: &[usize]| {
        let mut c = [0usize; 4];
        x.iter().zip(u).for_each(|(&a, &b)| c[a * 2 + b] += 1);
        c
    };
    for seed in 0..20 {
        let a = gcc_sample(&joint, &Zeta::zero(2, 2), &xs, seed).unwrap();
        let b = gcc_sample(&joint, &Zeta::zero(2, 2), &permuted, seed).unwrap();
        assert_eq!(table(&xs, &a), table(&permuted, &b));
    }
}

#[test]
fn simulation_is_deterministic() {
    let mut cfg = SimConfig::new(lossy(0.2), 8, 0.6, 200, 5).unwrap();
    cfg.trace = true;
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert_eq!(a, b);
    cfg.seed = 6;
    assert_ne!(simulate(&cfg).unwrap().trace, a.trace);
}

#[test]
fn loose_distortion_never_exceeds() {
    // Hamming distortion is at most 1, so D = 1 can never be exceeded.
    let r = simulate(&SimConfig::new(lossy(1.0), 8, 0.3, 300, 0).unwrap()).unwrap();
    assert_eq!(r.excess_or_error_count, 0);
}

#[test]
fn oversized_codebooks_exit_with_four() {
    // 2^{16 * 0.9} messages times 2^16 sequences exceeds the enumeration limit.
    let cfg = SimConfig::new(lossy(0.2), 16, 0.9, 1, 0).unwrap();
    let e = simulate(&cfg).unwrap_err();
    assert_eq!(e.exit_code(), 4);
    assert!(Codebook::new(0, 0, ENUMERATION_LIMIT + 1).is_err());
}
