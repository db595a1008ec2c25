use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srs_core::hash::{next_prime, AffineHash, BucketMap, Permutation, Role, SignFamily};

#[test]
fn member_rank_exhaustive_near_ten_thousand() {
    let d = 9973;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for width in [1u64, 7, 100, 9973] {
        let map = BucketMap::partition(AffineHash::from_seed(rng.random(), d), width);
        for i in 0..d {
            let (q, r) = map.rank_of(i);
            assert_eq!(map.member_at(q, r).unwrap(), i);
        }
    }
}

#[test]
fn bernoulli_rows_restricted_to_real_positions() {
    let d = next_prime(200);
    let n = 190;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for t in [1u64, 50, 150, d] {
        let map = BucketMap::new(AffineHash::from_seed(rng.random(), d), 1, t).unwrap();
        let on_all = (0..d).filter(|&i| map.contains(i)).count() as u64;
        assert_eq!(on_all, t);
        let on_real = (0..n).filter(|&i| map.contains(i)).count() as f64;
        let expected = t as f64 * n as f64 / d as f64;
        assert!((on_real - expected).abs() <= (d - n) as f64);
    }
}

#[test]
fn permutation_first_image_is_uniform() {
    // chi-squared over 10 cells with 9 degrees of freedom; 27.9 is the 0.999 quantile
    let m = 10;
    let draws = 1000;
    let mut hist = [0u32; 10];
    for s in 0..draws {
        hist[Permutation::random(m, s).forward(0)] += 1;
    }
    let e = draws as f64 / m as f64;
    let chi2: f64 = hist.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    assert!(chi2 < 27.9, "chi2 = {chi2}, hist = {hist:?}");
}

#[test]
fn permutation_round_trip_37() {
    let p = Permutation::random(37, 99);
    let v: Vec<f64> = (0..37).map(|i| i as f64 * 1.5).collect();
    assert_eq!(p.unpermute(&p.permute(&v).unwrap()).unwrap(), v);
    assert_eq!(Permutation::random(1, 3).forward(0), 0);
}

#[test]
fn sign_pair_correlation_is_small() {
    let d = next_prime(1000);
    let pairs = [(0u64, 1u64), (5, 900), (17, 18), (123, 456)];
    for &(i, j) in &pairs {
        let mut sum = 0i64;
        for seed in 0..10_000u64 {
            let fam = SignFamily::new(seed, 0, Role::EstSign, 0, d);
            sum += i64::from(fam.sign_at(0, i) * fam.sign_at(0, j));
        }
        let corr = sum as f64 / 10_000.0;
        assert!(corr.abs() <= 0.05, "pair ({i}, {j}): {corr}");
    }
}

#[test]
fn sign_rows_are_independent_across_rows() {
    let d = next_prime(5000);
    let fam = SignFamily::new(42, 1, Role::IdSign, 2, d);
    let agree = (0..d)
        .filter(|&i| fam.sign_at(3, i) == fam.sign_at(4, i))
        .count() as f64
        / d as f64;
    assert!((agree - 0.5).abs() < 0.05, "{agree}");
}
