//! Monte Carlo trial runner: synthetic signals, end-to-end encode and decode,
//! and aggregate statistics.
//!
//! Every trial derives its own seeds from the configured base seeds and the
//! trial index, so a suite is reproducible regardless of worker count.

use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{recover_traced, DecodeOptions, RecoveredVector};
use crate::ensemble::{Ensemble, EnsembleParams};
use crate::error::{Error, Result};
use crate::hash::{derive_seed, Role, SeedPath};
use crate::oracles::{self, ResidualDiagnostics};

/// Environment variable that caps the worker pool used by [`run_suite`].
pub const WORKERS_ENV: &str = "SRS_WORKERS";

/// Relative slack under which a recovery counts as exact.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    /// `k` non-zeros, nothing else.
    ExactSparse,
    /// `k` planted spikes plus Gaussian noise on every other position.
    SparsePlusGaussian,
    /// Magnitudes `(r+1)^(-decay)` over all positions in random order.
    PowerLaw,
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_sparse" | "exact" => Ok(Self::ExactSparse),
            "sparse_plus_gaussian" | "gaussian" => Ok(Self::SparsePlusGaussian),
            "power_law" => Ok(Self::PowerLaw),
            _ => Err(Error::InvalidParameter(format!("unknown signal kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalModel {
    pub kind: SignalKind,
    pub n: u64,
    pub k: u64,
    /// Spike magnitudes are uniform in `[min_mag, max_mag]` with random sign.
    pub min_mag: f64,
    pub max_mag: f64,
    /// Target `||x - head||` for the noisy kinds.
    pub noise_norm: f64,
    /// Power-law exponent.
    pub decay: f64,
    pub seed: u64,
}

impl Default for SignalModel {
    fn default() -> Self {
        Self {
            kind: SignalKind::ExactSparse,
            n: 1 << 14,
            k: 16,
            min_mag: 1.0,
            max_mag: 10.0,
            noise_norm: 0.0,
            decay: 1.0,
            seed: 0,
        }
    }
}

/// A generated signal with its planted decomposition `x = head + nu_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    pub x: Vec<f64>,
    /// Planted heavy part, sorted by position.
    pub head: Vec<(u64, f64)>,
    /// `||x - head||`.
    pub tail_norm: f64,
}

impl SignalModel {
    pub fn generate(&self) -> Result<Signal> {
        self.generate_with_seed(self.seed)
    }

    pub fn generate_with_seed(&self, seed: u64) -> Result<Signal> {
        let n = usize::try_from(self.n).map_err(|_| Error::InvalidParameter("n".into()))?;
        let k = self.k as usize;
        if k > n || n == 0 {
            return Err(Error::InvalidParameter(format!("k = {k} for n = {n}")));
        }
        if !(self.min_mag > 0.0 && self.max_mag >= self.min_mag) {
            return Err(Error::InvalidParameter(format!(
                "magnitudes [{}, {}]",
                self.min_mag, self.max_mag
            )));
        }
        if !(self.noise_norm >= 0.0) {
            return Err(Error::InvalidParameter("negative noise norm".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = vec![0.0; n];
        let head = match self.kind {
            SignalKind::ExactSparse | SignalKind::SparsePlusGaussian => {
                let mut support = rand::seq::index::sample(&mut rng, n, k).into_vec();
                support.sort_unstable();
                for &i in &support {
                    let mag = rng.random_range(self.min_mag..=self.max_mag);
                    x[i] = if rng.random::<bool>() { mag } else { -mag };
                }
                if self.kind == SignalKind::SparsePlusGaussian && self.noise_norm > 0.0 {
                    if k == n {
                        return Err(Error::InvalidParameter("no room for noise".into()));
                    }
                    let mut noise = oracles::random_unit(n - k, &mut rng).into_iter();
                    let mut in_head = support.iter().peekable();
                    for (i, xi) in x.iter_mut().enumerate() {
                        if in_head.peek() == Some(&&i) {
                            in_head.next();
                        } else {
                            *xi = self.noise_norm * noise.next().expect("n - k draws");
                        }
                    }
                }
                support.iter().map(|&i| (i as u64, x[i])).collect::<Vec<_>>()
            }
            SignalKind::PowerLaw => {
                if !(self.decay > 0.0) {
                    return Err(Error::InvalidParameter("decay must be positive".into()));
                }
                let order = rand::seq::index::sample(&mut rng, n, n).into_vec();
                let mut tail_sq = 0.0;
                for (r, &i) in order.iter().enumerate() {
                    let mag = ((r + 1) as f64).powf(-self.decay);
                    x[i] = if rng.random::<bool>() { mag } else { -mag };
                    if r >= k {
                        tail_sq += mag * mag;
                    }
                }
                let scale = if self.noise_norm > 0.0 && tail_sq > 0.0 {
                    self.noise_norm / tail_sq.sqrt()
                } else {
                    self.max_mag
                };
                x.iter_mut().for_each(|v| *v *= scale);
                let mut head: Vec<(u64, f64)> =
                    order[..k].iter().map(|&i| (i as u64, x[i])).collect();
                head.sort_unstable_by_key(|&(i, _)| i);
                head
            }
        };
        let mut tail = x.clone();
        for &(i, _) in &head {
            tail[i as usize] = 0.0;
        }
        Ok(Signal {
            tail_norm: oracles::l2(&tail),
            x,
            head,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub params: EnsembleParams,
    pub signal: SignalModel,
    /// Norm of the post-measurement noise `nu_2`.
    pub nu2_norm: f64,
    /// When set, `nu2_norm` is in units of the sampled operator norm.
    pub nu2_in_norm_units: bool,
    /// Samples used for the operator-norm estimate.
    pub norm_trials: usize,
    /// Success constant on `||x - x_k||`.
    pub success_c: f64,
    /// Coefficient on `log2(k) ||nu_2|| / M`.
    pub alpha: f64,
    pub trials: usize,
    /// Reuse one matrix for all trials instead of drawing a fresh one.
    pub fixed_matrix: bool,
    pub prune: Option<usize>,
    /// Record loop-invariant diagnostics (costs a dense pass per iteration).
    pub diagnostics: bool,
    /// Base seed for measurement noise.
    pub noise_seed: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            params: EnsembleParams::new(1 << 14, 16),
            signal: SignalModel::default(),
            nu2_norm: 0.0,
            nu2_in_norm_units: false,
            norm_trials: 100,
            success_c: 2.0,
            alpha: 1.0,
            trials: 100,
            fixed_matrix: false,
            prune: None,
            diagnostics: false,
            noise_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub ensemble_seed: u64,
    pub signal_seed: u64,
    pub m: usize,
    /// Largest column sparsity over the signal's support.
    pub max_column_sparsity: usize,
    pub recovered_entries: usize,
    pub error: f64,
    /// `||x - x_k||` for the best `k`-term approximation.
    pub tail_norm: f64,
    pub nu2_norm: f64,
    pub bound: f64,
    pub success: bool,
    pub touches: u64,
    pub encode_ms: f64,
    pub decode_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant: Option<Vec<ResidualDiagnostics>>,
}

/// Aggregate over a suite. Contains no timings, so identical inputs give
/// byte-identical JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Binomial standard error of `success_rate`.
    pub std_error: f64,
    pub mean_error: f64,
    pub error_p50: f64,
    pub error_p90: f64,
    pub error_max: f64,
    pub m_min: usize,
    pub m_max: usize,
    pub max_column_sparsity: usize,
    pub mean_touches: f64,
    pub max_touches: u64,
    pub norm_estimate: Option<f64>,
    /// Fraction of trials whose invariant held at every iteration.
    pub invariant_rate: Option<f64>,
}

/// Timing view of a suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub encode_ms_mean: f64,
    pub encode_ms_p50: f64,
    pub decode_ms_mean: f64,
    pub decode_ms_p50: f64,
}

fn trial_seed(base: u64, role: Role, trial: usize) -> u64 {
    derive_seed(
        base,
        SeedPath {
            iteration: 0,
            role,
            copy: 0,
            row: trial as u64,
        },
    )
}

/// Runs one trial. `norm_estimate` is the operator-norm scale `M` and is
/// required whenever `nu_2` is non-zero.
pub fn run_trial(cfg: &TrialConfig, trial: usize, norm_estimate: Option<f64>) -> Result<TrialReport> {
    let ensemble_seed = if cfg.fixed_matrix {
        cfg.params.master_seed
    } else {
        trial_seed(cfg.params.master_seed, Role::Trial, trial)
    };
    let signal_seed = trial_seed(cfg.signal.seed, Role::Signal, trial);
    let ens = Ensemble::plan(&cfg.params.clone().with_seed(ensemble_seed))?;
    run_trial_on(cfg, &ens, trial, signal_seed, norm_estimate)
}

/// Runs one trial against an already planned ensemble.
pub fn run_trial_on(
    cfg: &TrialConfig,
    ens: &Ensemble,
    trial: usize,
    signal_seed: u64,
    norm_estimate: Option<f64>,
) -> Result<TrialReport> {
    if cfg.signal.n != ens.n() {
        return Err(Error::Dimension(format!(
            "signal n = {} for ensemble n = {}",
            cfg.signal.n,
            ens.n()
        )));
    }
    let signal = cfg.signal.generate_with_seed(signal_seed)?;
    let x = &signal.x;

    let t0 = Instant::now();
    let mut sketch = ens.zero_sketch();
    let mut max_column_sparsity = 0;
    for (i, &v) in x.iter().enumerate() {
        if v != 0.0 {
            let s = ens.update_counted(&mut sketch, i as u64, v)?;
            max_column_sparsity = max_column_sparsity.max(s);
        }
    }
    let encode_ms = t0.elapsed().as_secs_f64() * 1e3;

    let nu2_norm = if cfg.nu2_in_norm_units {
        cfg.nu2_norm * norm_estimate.unwrap_or(0.0)
    } else {
        cfg.nu2_norm
    };
    if nu2_norm > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.noise_seed, Role::Noise, trial));
        let dir = oracles::random_unit(ens.m(), &mut rng);
        let nu2: Vec<f64> = dir.iter().map(|v| v * nu2_norm).collect();
        sketch = ens.add_measurement_noise(&sketch, &nu2)?;
    }

    let opts = DecodeOptions {
        prune: cfg.prune,
        ..DecodeOptions::default()
    };
    let mut snapshots: Vec<(u32, RecoveredVector)> = Vec::new();
    let t1 = Instant::now();
    let (a, stats) = recover_traced(ens, &sketch, &opts, |j, a| {
        if cfg.diagnostics {
            snapshots.push((j, a.clone()));
        }
    })?;
    let decode_ms = t1.elapsed().as_secs_f64() * 1e3;

    let k = cfg.params.k;
    let top = oracles::top_k_oracle(x, k as usize);
    let error = a.l2_error(x);
    let noise_term = if nu2_norm > 0.0 {
        let m_est = norm_estimate.ok_or_else(|| {
            Error::InvalidParameter("measurement noise needs an operator-norm estimate".into())
        })?;
        cfg.alpha * (k.max(2) as f64).log2() * nu2_norm / m_est
    } else {
        0.0
    };
    let bound = cfg.success_c * top.tail_norm + noise_term;
    let success = error <= bound + EXACT_TOL * oracles::l2(x);

    let invariant = cfg.diagnostics.then(|| {
        let heavy: Vec<u64> = top.head.iter().map(|&(i, _)| i).collect();
        snapshots
            .iter()
            .map(|(j, a)| oracles::residual_diagnostics(x, &heavy, top.tail_norm, a, *j, k))
            .collect()
    });

    Ok(TrialReport {
        trial,
        ensemble_seed: ens.params().master_seed,
        signal_seed,
        m: ens.m(),
        max_column_sparsity,
        recovered_entries: a.len(),
        error,
        tail_norm: top.tail_norm,
        nu2_norm,
        bound,
        success,
        touches: stats.touches,
        encode_ms,
        decode_ms,
        invariant,
    })
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        b = b.num_threads(n.max(1));
    }
    b.build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))
}

/// Runs `cfg.trials` trials in parallel. Reports come back in trial order.
pub fn run_suite(cfg: &TrialConfig) -> Result<(RunSummary, Vec<TrialReport>)> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let pool = worker_pool()?;
    pool.install(|| {
        let norm_estimate = if cfg.nu2_norm > 0.0 {
            Some(
                oracles::ensemble_norm_estimate(&cfg.params, cfg.norm_trials, cfg.params.master_seed)?
                    .quantile_75,
            )
        } else {
            None
        };
        let fixed = if cfg.fixed_matrix {
            Some(Ensemble::plan(&cfg.params)?)
        } else {
            None
        };
        let mut reports = (0..cfg.trials)
            .into_par_iter()
            .map(|t| match &fixed {
                Some(ens) => {
                    let seed = trial_seed(cfg.signal.seed, Role::Signal, t);
                    run_trial_on(cfg, ens, t, seed, norm_estimate)
                }
                None => run_trial(cfg, t, norm_estimate),
            })
            .collect::<Result<Vec<_>>>()?;
        reports.sort_by_key(|r| r.trial);
        Ok((summarize(&reports, norm_estimate), reports))
    })
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

pub fn summarize(reports: &[TrialReport], norm_estimate: Option<f64>) -> RunSummary {
    let n = reports.len();
    let successes = reports.iter().filter(|r| r.success).count();
    let rate = successes as f64 / n as f64;
    let mut errors: Vec<f64> = reports.iter().map(|r| r.error).collect();
    errors.sort_by(f64::total_cmp);
    let invariant_rate = reports.iter().all(|r| r.invariant.is_some()).then(|| {
        reports
            .iter()
            .filter(|r| r.invariant.as_ref().is_some_and(|v| v.iter().all(|d| d.holds)))
            .count() as f64
            / n as f64
    });
    RunSummary {
        trials: n,
        successes,
        success_rate: rate,
        std_error: (rate * (1.0 - rate) / n as f64).sqrt(),
        mean_error: errors.iter().sum::<f64>() / n as f64,
        error_p50: percentile(&errors, 0.5),
        error_p90: percentile(&errors, 0.9),
        error_max: errors[n - 1],
        m_min: reports.iter().map(|r| r.m).min().unwrap_or(0),
        m_max: reports.iter().map(|r| r.m).max().unwrap_or(0),
        max_column_sparsity: reports.iter().map(|r| r.max_column_sparsity).max().unwrap_or(0),
        mean_touches: reports.iter().map(|r| r.touches as f64).sum::<f64>() / n as f64,
        max_touches: reports.iter().map(|r| r.touches).max().unwrap_or(0),
        norm_estimate,
        invariant_rate,
    }
}

pub fn timing_summary(reports: &[TrialReport]) -> TimingSummary {
    let stats = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        (v.iter().sum::<f64>() / v.len().max(1) as f64, percentile(&v, 0.5))
    };
    let (encode_ms_mean, encode_ms_p50) = stats(reports.iter().map(|r| r.encode_ms).collect());
    let (decode_ms_mean, decode_ms_p50) = stats(reports.iter().map(|r| r.decode_ms).collect());
    TimingSummary {
        encode_ms_mean,
        encode_ms_p50,
        decode_ms_mean,
        decode_ms_p50,
    }
}

/// Per-trial rows (without invariant detail) as CSV.
pub fn write_trials_csv(reports: &[TrialReport], w: impl std::io::Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "trial",
        "ensemble_seed",
        "signal_seed",
        "m",
        "max_column_sparsity",
        "recovered_entries",
        "error",
        "tail_norm",
        "nu2_norm",
        "bound",
        "success",
        "touches",
        "encode_ms",
        "decode_ms",
    ])?;
    for r in reports {
        wtr.write_record([
            r.trial.to_string(),
            r.ensemble_seed.to_string(),
            r.signal_seed.to_string(),
            r.m.to_string(),
            r.max_column_sparsity.to_string(),
            r.recovered_entries.to_string(),
            r.error.to_string(),
            r.tail_norm.to_string(),
            r.nu2_norm.to_string(),
            r.bound.to_string(),
            r.success.to_string(),
            r.touches.to_string(),
            format!("{:.3}", r.encode_ms),
            format!("{:.3}", r.decode_ms),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
