use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srs_core::decoder::{estimate, identify, recover_traced};
use srs_core::oracles::{dense_reference_decode, dense_reference_estimates, top_k_oracle};
use srs_core::{recover, DecodeOptions, Ensemble, EnsembleParams};

#[test]
fn estimate_matches_dense_reference() {
    for (n, k, seed) in [(128u64, 4u64, 0u64), (128, 8, 1), (500, 5, 2)] {
        let ens = Ensemble::plan(&EnsembleParams::new(n, k).with_seed(seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < 0.1 { rng.random_range(-3.0..3.0) } else { 0.0 })
            .collect();
        let y = ens.permutation().unpermute(&ens.encode(&x).unwrap().values).unwrap();
        let all: BTreeSet<u64> = (0..n).collect();
        let reference = dense_reference_decode(&ens, &x).unwrap();
        for it in ens.iterations() {
            let got: BTreeMap<u64, f64> =
                estimate(&ens, it.j, &y[it.est_range()], &all).into_iter().collect();
            for i in 0..n {
                let g = got.get(&i).copied().unwrap_or(0.0);
                assert_eq!(g, reference[it.j as usize][i as usize], "j={} i={i}", it.j);
            }
        }
    }
}

#[test]
fn identify_sweeps_every_single_spike() {
    let n = 256;
    let ens = Ensemble::plan(&EnsembleParams::new(n, 4).with_seed(3)).unwrap();
    let it = &ens.iterations()[0];
    for i in 0..n {
        for v in [1.0, -7.5] {
            let s = ens.encode_sparse(&[(i, v)]).unwrap();
            let y = ens.permutation().unpermute(&s.values).unwrap();
            let res = identify(&ens, 0, &y[it.id_range()], 0.0);
            assert_eq!(res.candidates, BTreeSet::from([i]), "i={i}");
            assert_eq!(res.diagnostics.len(), it.n_copies as usize);
        }
    }
}

#[test]
fn identify_separates_spikes_in_distinct_buckets() {
    let ens = Ensemble::plan(&EnsembleParams::new(2000, 8).with_seed(9)).unwrap();
    let it = &ens.iterations()[0];
    let maps = ens.maps(0, 0);
    let a = 10u64;
    let b = (0..2000).find(|&t| maps.id.bucket_of(t) != maps.id.bucket_of(a)).unwrap();
    let s = ens.encode_sparse(&[(a, 2.0), (b, -3.0)]).unwrap();
    let y = ens.permutation().unpermute(&s.values).unwrap();
    let res = identify(&ens, 0, &y[it.id_range()], 0.0);
    assert!(res.candidates.contains(&a) && res.candidates.contains(&b));
}

#[test]
fn reference_estimates_exact_for_lone_spike() {
    let ens = Ensemble::plan(&EnsembleParams::new(300, 3).with_seed(4)).unwrap();
    let mut x = vec![0.0; 300];
    x[123] = 4.25;
    let est = dense_reference_estimates(&ens, 0, &x).unwrap();
    assert_eq!(est[123], 4.25);
}

#[test]
fn recovery_is_deterministic_and_exact_for_small_supports() {
    let ens = Ensemble::plan(&EnsembleParams::new(4096, 8).with_seed(21)).unwrap();
    let entries = [(5u64, 3.0), (1000, -2.0), (4095, 0.5)];
    let s = ens.encode_sparse(&entries).unwrap();
    let a = recover(&ens, &s).unwrap();
    let b = recover(&ens, &s).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().collect::<Vec<_>>(), entries.to_vec());
}

#[test]
fn observer_sees_every_iteration() {
    let ens = Ensemble::plan(&EnsembleParams::new(4096, 16).with_seed(2)).unwrap();
    let s = ens.encode_sparse(&[(1, 1.0)]).unwrap();
    let mut seen = Vec::new();
    let (_, stats) = recover_traced(&ens, &s, &DecodeOptions::default(), |j, _| seen.push(j)).unwrap();
    let n_it = ens.iterations().len() as u32;
    assert_eq!(seen, (0..=n_it).collect::<Vec<_>>());
    assert_eq!(stats.iterations.len(), n_it as usize);
    assert!(stats.touches > 0);
}

proptest! {
    #[test]
    fn top_k_energy_bookkeeping(
        vals in prop::collection::vec(-1000i32..1000, 1..60),
        k in 0usize..70,
    ) {
        let x: Vec<f64> = vals.iter().map(|&v| f64::from(v) / 8.0).collect();
        let t = top_k_oracle(&x, k);
        let total: f64 = x.iter().map(|v| v * v).sum();
        let head: f64 = t.head.iter().map(|(_, v)| v * v).sum();
        // dyadic inputs keep every square and sum exact
        let tail: f64 = t.tail.iter().map(|v| v * v).sum();
        prop_assert_eq!(tail, total - head);
        prop_assert_eq!(t.tail_norm, tail.sqrt());
        prop_assert!(t.head.len() <= k);
        let smallest_head = t.head.iter().map(|(_, v)| v.abs()).fold(f64::INFINITY, f64::min);
        let largest_tail = t.tail.iter().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!(t.head.is_empty() || smallest_head >= largest_tail);
    }
}
