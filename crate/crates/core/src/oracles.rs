//! Ground-truth references and analytic tail bounds.
//!
//! Nothing here is on the decode path. These are brute-force or closed-form
//! evaluators that tests and the trial harness compare the decoder against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::RecoveredVector;
use crate::ensemble::{Ensemble, EnsembleParams};
use crate::error::{Error, Result};
use crate::hash::{derive_seed, Role, SeedPath};
use crate::matrix::SparseMatrix;

/// Largest signal length the brute-force oracles accept.
pub const ORACLE_MAX_N: u64 = 1 << 12;

/// Best `k`-term approximation and its tail.
#[derive(Clone, Debug, PartialEq)]
pub struct TopK {
    /// `(position, value)` sorted by position.
    pub head: Vec<(u64, f64)>,
    pub tail: Vec<f64>,
    pub tail_norm: f64,
}

/// Keeps the `k` largest magnitudes (ties to the lower index).
pub fn top_k_oracle(x: &[f64], k: usize) -> TopK {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut head: Vec<(u64, f64)> = order
        .iter()
        .take(k)
        .filter(|&&i| x[i] != 0.0)
        .map(|&i| (i as u64, x[i]))
        .collect();
    head.sort_by_key(|&(i, _)| i);
    let mut tail = x.to_vec();
    for &(i, _) in &head {
        tail[i as usize] = 0.0;
    }
    let tail_norm = l2(&tail);
    TopK {
        head,
        tail,
        tail_norm,
    }
}

pub fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Estimation block of iteration `j` built row by row from the hash maps:
/// row `(copy, q)` holds `sign_q(i)` at every position `i < N` with
/// `bucket(i) == q`. Positions are scanned exhaustively.
pub fn estimation_matrix(ens: &Ensemble, j: u32) -> Result<SparseMatrix> {
    guard(ens.n())?;
    let it = &ens.iterations()[j as usize];
    let mut rows = Vec::with_capacity(it.est_block_rows());
    for copy in 0..it.n_copies {
        let maps = ens.maps(j, copy);
        for q in 0..it.est_rows {
            let signs = maps.est_signs.row_hash(q);
            let row: Vec<(usize, f64)> = (0..ens.n())
                .filter(|&i| maps.est.bucket_of(i) == q)
                .map(|i| (i as usize, f64::from(signs.sign(i))))
                .collect();
            rows.push(row);
        }
    }
    SparseMatrix::from_rows(ens.n() as usize, rows)
}

/// Count-sketch style full-scan estimator: for iteration `j` and every
/// position `i`, the median over estimation rows containing `i` of
/// `(E x)_row * sign_row(i)`. Even counts average the middle pair.
pub fn dense_reference_estimates(ens: &Ensemble, j: u32, x: &[f64]) -> Result<Vec<f64>> {
    let e = estimation_matrix(ens, j)?;
    let z = e.apply(x)?;
    let mut out = vec![0.0; x.len()];
    let mut vals = Vec::new();
    for (i, o) in out.iter_mut().enumerate() {
        vals.clear();
        for (r, row) in e.rows().enumerate() {
            if let Ok(pos) = row.binary_search_by_key(&i, |&(c, _)| c) {
                vals.push(z[r] * row[pos].1);
            }
        }
        vals.sort_by(f64::total_cmp);
        let n = vals.len();
        *o = if n == 0 {
            0.0
        } else if n % 2 == 1 {
            vals[n / 2]
        } else {
            (vals[n / 2 - 1] + vals[n / 2]) / 2.0
        };
    }
    Ok(out)
}

/// Reference estimates for every iteration.
pub fn dense_reference_decode(ens: &Ensemble, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    (0..ens.iterations().len() as u32)
        .map(|j| dense_reference_estimates(ens, j, x))
        .collect()
}

fn guard(n: u64) -> Result<()> {
    if n > ORACLE_MAX_N {
        return Err(Error::OracleGuard(format!(
            "n = {n} exceeds oracle limit {ORACLE_MAX_N}"
        )));
    }
    Ok(())
}

/// Upper bound on `Pr[sum of n iid Bernoulli(p) > theta n]`:
/// `((p^theta / e^p) (e / theta)^theta)^n`.
pub fn chernoff_binary_bound(p: f64, theta: f64, n: u64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) || !(theta > p && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= p < theta < 1, got p = {p}, theta = {theta}"
        )));
    }
    let per = theta * p.ln() - p + theta - theta * theta.ln();
    Ok((n as f64 * per).exp())
}

/// Parameters of the balls-into-bins-with-dustbin model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    /// Balls.
    pub m: u64,
    /// Bins.
    pub n: u64,
    /// Per-bin probability; the dustbin gets `1 - n p`.
    pub p: f64,
    /// Occupancy threshold.
    pub h: u64,
    /// Fraction of bins that must reach `h`.
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonBound {
    pub q: f64,
    pub bound: f64,
}

/// Upper bound on the probability that fewer than `theta n` bins receive at
/// least `h` balls each:
/// `min{2q/(1-theta), 2(q e/(1-theta))^((1-theta) n)}` with
/// `q = e^{-mp} (mp)^h / (h! (1 - h/(mp)))`.
pub fn poisson_bins_bound(query: &BoundQuery) -> Result<PoissonBound> {
    let BoundQuery { m, n, p, h, theta } = *query;
    let mp = m as f64 * p;
    if !(p > 0.0) || n as f64 * p > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "need 0 < p and n p <= 1, got p = {p}, n = {n}"
        )));
    }
    if (h as f64) >= mp {
        return Err(Error::InvalidParameter(format!("need h < m p, got h = {h}, mp = {mp}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta = {theta} outside (0, 1)")));
    }
    let ln_fact: f64 = (2..=h).map(|i| (i as f64).ln()).sum();
    let ln_q = -mp + h as f64 * mp.ln() - ln_fact - (1.0 - h as f64 / mp).ln();
    let q = ln_q.exp();
    let first = 2.0 * q / (1.0 - theta);
    let second = 2.0 * ((q * std::f64::consts::E / (1.0 - theta)).ln() * (1.0 - theta) * n as f64).exp();
    Ok(PoissonBound {
        q,
        bound: first.min(second),
    })
}

/// Monte Carlo frequency of `sum > theta n` for `n` Bernoulli(`p`) draws.
pub fn simulate_binary_tail(p: f64, theta: f64, n: u64, sims: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cut = theta * n as f64;
    let hits = (0..sims)
        .filter(|_| ((0..n).filter(|_| rng.random::<f64>() < p).count() as f64) > cut)
        .count();
    hits as f64 / sims as f64
}

/// Monte Carlo frequency of "fewer than `theta n` bins hold `>= h` balls".
pub fn simulate_bins_failure(query: &BoundQuery, sims: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let need = (query.theta * query.n as f64).ceil() as usize;
    let mut load = vec![0u64; query.n as usize];
    let mut failures = 0u64;
    for _ in 0..sims {
        load.iter_mut().for_each(|l| *l = 0);
        for _ in 0..query.m {
            let u: f64 = rng.random();
            let bin = (u / query.p) as usize;
            if bin < load.len() {
                load[bin] += 1;
            }
        }
        if load.iter().filter(|&&l| l >= query.h).count() < need {
            failures += 1;
        }
    }
    failures as f64 / sims as f64
}

/// Sampled `||Phi x|| / ||x||` over random unit vectors and fresh matrices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub samples: usize,
    /// 75th percentile: the smallest `M` exceeded with probability about 1/4.
    pub quantile_75: f64,
    /// Mean ratio.
    pub mean_ratio: f64,
}

/// `||y|| / ||x||`; rejects the zero vector.
pub fn norm_ratio(y: &[f64], x: &[f64]) -> Result<f64> {
    let nx = l2(x);
    if nx == 0.0 {
        return Err(Error::InvalidParameter("norm ratio of the zero vector".into()));
    }
    Ok(l2(y) / nx)
}

/// Uniformly random unit vector of length `n`.
pub fn random_unit(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let norm = l2(&v);
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn summarize_ratios(mut ratios: Vec<f64>) -> NormEstimate {
    let samples = ratios.len();
    let mean_ratio = ratios.iter().sum::<f64>() / samples as f64;
    ratios.sort_by(f64::total_cmp);
    let idx = ((0.75 * samples as f64).ceil() as usize).clamp(1, samples) - 1;
    NormEstimate {
        samples,
        quantile_75: ratios[idx],
        mean_ratio,
    }
}

/// Generic estimator: `apply(trial_seed, x)` must draw a fresh random matrix
/// from `trial_seed` and return its product with `x`.
pub fn operator_norm_estimate<F>(n_cols: usize, trials: usize, seed: u64, mut apply: F) -> Result<NormEstimate>
where
    F: FnMut(u64, &[f64]) -> Result<Vec<f64>>,
{
    if trials < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 trials, got {trials}")));
    }
    let mut ratios = Vec::with_capacity(trials);
    for t in 0..trials {
        let s = derive_seed(seed, SeedPath { iteration: 0, role: Role::Trial, copy: 1, row: t as u64 });
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let x = random_unit(n_cols, &mut rng);
        let y = apply(s, &x)?;
        ratios.push(norm_ratio(&y, &x)?);
    }
    Ok(summarize_ratios(ratios))
}

/// [`operator_norm_estimate`] for the measurement ensemble, with a fresh
/// master seed per sample. Runs samples in parallel.
pub fn ensemble_norm_estimate(params: &EnsembleParams, trials: usize, seed: u64) -> Result<NormEstimate> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 trials, got {trials}")));
    }
    let ratios = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = derive_seed(seed, SeedPath { iteration: 0, role: Role::Trial, copy: 2, row: t as u64 });
            let ens = Ensemble::plan(&params.clone().with_seed(s))?;
            let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0xa5a5);
            let x = random_unit(params.n as usize, &mut rng);
            let y = ens.encode(&x)?;
            norm_ratio(&y.values, &x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_ratios(ratios))
}

/// Among identification buckets at iteration `j` that contain at least one
/// support element, the fraction containing exactly one. Empty support
/// gives 1.
pub fn isolation_rate(ens: &Ensemble, j: u32, support: &[u64]) -> f64 {
    if support.is_empty() {
        return 1.0;
    }
    let it = &ens.iterations()[j as usize];
    let mut occupied = 0usize;
    let mut lonely = 0usize;
    let mut counts = std::collections::HashMap::new();
    for copy in 0..it.n_copies {
        counts.clear();
        let maps = ens.maps(j, copy);
        for &t in support {
            *counts.entry(maps.id.bucket_of(t)).or_insert(0usize) += 1;
        }
        occupied += counts.len();
        lonely += counts.values().filter(|&&c| c == 1).count();
    }
    lonely as f64 / occupied as f64
}

/// Loop-invariant bookkeeping at the start of iteration `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub j: u32,
    /// Fewest heavy residual entries that must be set aside for the rest of
    /// the residual to fit the noise budget.
    pub undiscovered: usize,
    /// `k / 2^j`.
    pub allowed: f64,
    /// Residual norm outside the `floor(k/2^j)` largest heavy entries,
    /// divided by `||nu_1||`.
    pub tail_scaled: f64,
    /// `2 - (3/4)^j`.
    pub tail_limit: f64,
    pub holds: bool,
}

/// Checks whether the residual `x - a` splits as `x^(j) + nu^(j)` with
/// `x^(j)` supported on at most `k/2^j` heavy positions and
/// `||nu^(j)|| <= (2 - (3/4)^j) ||nu_1||`.
pub fn residual_diagnostics(
    x: &[f64],
    heavy: &[u64],
    tail_norm: f64,
    a: &RecoveredVector,
    j: u32,
    k: u64,
) -> ResidualDiagnostics {
    let mut r: Vec<f64> = x.to_vec();
    for (i, v) in a.iter() {
        if let Some(ri) = r.get_mut(i as usize) {
            *ri -= v;
        }
    }
    let mut heavy_sq: Vec<f64> = heavy.iter().map(|&t| r[t as usize].powi(2)).collect();
    heavy_sq.sort_by(|a, b| b.total_cmp(a));
    let heavy_set: std::collections::HashSet<u64> = heavy.iter().copied().collect();
    let light: f64 = r
        .iter()
        .enumerate()
        .filter(|(i, _)| !heavy_set.contains(&(*i as u64)))
        .map(|(_, v)| v * v)
        .sum();
    // tail_after[s]: residual energy once the s largest heavy entries are removed
    let mut tail_after = vec![light; heavy_sq.len() + 1];
    for s in (0..heavy_sq.len()).rev() {
        tail_after[s] = tail_after[s + 1] + heavy_sq[s];
    }
    let tail_limit = 2.0 - 0.75f64.powi(j as i32);
    let budget = tail_limit * tail_norm;
    let fits = |s: usize| tail_after[s].sqrt() <= budget * (1.0 + 1e-12);
    let undiscovered = (0..tail_after.len()).find(|&s| fits(s)).unwrap_or(heavy.len() + 1);
    let allowed = k as f64 / 2f64.powi(j as i32);
    let s_allowed = (allowed.floor() as usize).min(heavy.len());
    let tail_scaled = if tail_norm > 0.0 {
        tail_after[s_allowed].sqrt() / tail_norm
    } else if tail_after[s_allowed] == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    ResidualDiagnostics {
        j,
        undiscovered,
        allowed,
        tail_scaled,
        tail_limit,
        holds: (undiscovered as f64) <= allowed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_basics() {
        let x = [0.0, 3.0, 0.0, -1.0];
        let t = top_k_oracle(&x, 2);
        assert_eq!(t.head, vec![(1, 3.0), (3, -1.0)]);
        assert_eq!(t.tail_norm, 0.0);
        let t = top_k_oracle(&x, 4);
        assert_eq!(t.tail_norm, 0.0);
        let y = [1.0, -2.0, 2.0, 0.5];
        let t = top_k_oracle(&y, 1);
        assert_eq!(t.head, vec![(1, -2.0)]);
        let full: f64 = y.iter().map(|v| v * v).sum();
        assert!((t.tail_norm.powi(2) - (full - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn chernoff_limits() {
        let b = chernoff_binary_bound(0.5, 0.5 + 1e-9, 10).unwrap();
        assert!((b - 1.0).abs() < 1e-6);
        let one = chernoff_binary_bound(0.1, 0.5, 10).unwrap();
        let two = chernoff_binary_bound(0.1, 0.5, 20).unwrap();
        assert!((two - one * one).abs() < 1e-15);
        assert!(chernoff_binary_bound(0.5, 0.4, 10).is_err());
    }

    #[test]
    fn poisson_h_zero() {
        let q = BoundQuery { m: 100, n: 10, p: 0.05, h: 0, theta: 0.5 };
        let b = poisson_bins_bound(&q).unwrap();
        assert!((b.q - (-5.0f64).exp()).abs() < 1e-15);
        assert!(b.bound <= 1.0);
        let bad = BoundQuery { h: 5, ..q };
        assert!(poisson_bins_bound(&bad).is_err());
        let bad = BoundQuery { p: 0.2, ..q };
        assert!(poisson_bins_bound(&bad).is_err());
    }

    #[test]
    fn norm_ratio_rejects_zero() {
        assert!(norm_ratio(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn oracle_guard() {
        let e = Ensemble::plan(&EnsembleParams::new(5000, 4)).unwrap();
        assert!(matches!(estimation_matrix(&e, 0), Err(Error::OracleGuard(_))));
    }

    #[test]
    fn isolation_conventions() {
        let e = Ensemble::plan(&EnsembleParams::new(1024, 16)).unwrap();
        assert_eq!(isolation_rate(&e, 0, &[]), 1.0);
        assert_eq!(isolation_rate(&e, 0, &[17]), 1.0);
    }

    #[test]
    fn diagnostics_initial_state() {
        // at j = 0 nothing is recovered: removing all k heavies leaves exactly nu_1
        let mut x = vec![0.01; 100];
        let heavy = [3u64, 50];
        x[3] = 5.0;
        x[50] = -4.0;
        let tail = (98.0f64 * 1e-4).sqrt();
        let d = residual_diagnostics(&x, &heavy, tail, &RecoveredVector::default(), 0, 2);
        assert!(d.holds, "{d:?}");
        assert_eq!(d.undiscovered, 2);
        assert!((d.tail_scaled - 1.0).abs() < 1e-9);
    }
}
