//! Sublinear iterative decoder.
//!
//! Each iteration reads only its own slice of the (unpermuted) sketch:
//! identification sections produce candidate positions, estimation rows
//! give signed-median values, and the recovered increment is subtracted from
//! the slices of all later iterations by regenerating its columns.

use std::collections::{BTreeMap, BTreeSet};

use crate::ensemble::{Ensemble, SketchVector};
use crate::error::{Error, Result};

/// Sections whose median ones-row magnitude is at most this fraction of the
/// largest sketch magnitude are treated as empty (round-off residue).
pub const DEFAULT_ZERO_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOptions {
    /// Keep only this many largest-magnitude entries at the end.
    pub prune: Option<usize>,
    pub zero_floor: f64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            prune: None,
            zero_floor: DEFAULT_ZERO_FLOOR,
        }
    }
}

/// Sparse output `x_hat`, with the iteration that last touched each entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecoveredVector {
    entries: BTreeMap<u64, f64>,
    origin: BTreeMap<u64, u32>,
}

impl RecoveredVector {
    pub fn from_entries(entries: impl IntoIterator<Item = (u64, f64)>) -> Self {
        let mut out = Self::default();
        for (i, v) in entries {
            if v != 0.0 {
                out.entries.insert(i, v);
            }
        }
        out
    }

    pub fn get(&self, i: u64) -> f64 {
        self.entries.get(&i).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.entries.iter().map(|(&i, &v)| (i, v))
    }

    pub fn origin(&self, i: u64) -> Option<u32> {
        self.origin.get(&i).copied()
    }

    fn add(&mut self, i: u64, v: f64, j: u32) {
        let e = self.entries.entry(i).or_insert(0.0);
        *e += v;
        if *e == 0.0 {
            self.entries.remove(&i);
            self.origin.remove(&i);
        } else {
            self.origin.insert(i, j);
        }
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, v) in self.iter() {
            x[i as usize] = v;
        }
        x
    }

    /// `||x - self||_2` against a dense reference.
    pub fn l2_error(&self, x: &[f64]) -> f64 {
        let mut err: f64 = x
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                let d = xi - self.get(i as u64);
                d * d
            })
            .sum();
        for (i, v) in self.iter() {
            if i as usize >= x.len() {
                err += v * v;
            }
        }
        err.sqrt()
    }
}

/// One decoded section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub position: u64,
    pub copy: u32,
    pub bucket: u64,
    pub local: u64,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdentifyResult {
    pub candidates: BTreeSet<u64>,
    pub diagnostics: Vec<Candidate>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IterationStats {
    pub j: u32,
    pub sections_read: u64,
    pub sections_decoded: u64,
    pub candidates: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecodeStats {
    /// Sketch cells read plus column entries regenerated.
    pub touches: u64,
    pub iterations: Vec<IterationStats>,
}

fn lower_median(v: &mut [f64]) -> f64 {
    debug_assert!(!v.is_empty());
    let mid = (v.len() - 1) / 2;
    *v.select_nth_unstable_by(mid, f64::total_cmp).1
}

fn symmetric_median(v: &mut [f64]) -> f64 {
    debug_assert!(!v.is_empty());
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Identification for iteration `j`. `w` is the identification slice of the
/// unpermuted residual (all copies, in layout order). Sections whose median
/// ones-row magnitude is `<= floor` are skipped.
pub fn identify(ens: &Ensemble, j: u32, w: &[f64], floor: f64) -> IdentifyResult {
    let mut touches = 0;
    identify_counted(ens, j, w, floor, &mut touches).0
}

fn identify_counted(
    ens: &Ensemble,
    j: u32,
    w: &[f64],
    floor: f64,
    touches: &mut u64,
) -> (IdentifyResult, IterationStats) {
    let it = &ens.iterations()[j as usize];
    let code = ens.code();
    let m_c = code.msg_bits();
    let l = it.section_len as usize;
    let ones = it.ones_rows as usize;
    let mut out = IdentifyResult::default();
    let mut stats = IterationStats {
        j,
        ..Default::default()
    };
    let mut mags = vec![0.0; ones];
    for copy in 0..it.n_copies {
        let maps = ens.maps(j, copy);
        let base = copy as usize * it.id_copy_rows();
        for q in 0..maps.id.n_buckets() {
            let sec = &w[base + q as usize * l..][..l];
            for (m, v) in mags.iter_mut().zip(&sec[..ones]) {
                *m = v.abs();
            }
            *touches += ones as u64;
            stats.sections_read += 1;
            let med = lower_median(&mut mags);
            if med <= floor {
                continue;
            }
            let threshold = med / 2.0;
            let mut local = 0u64;
            let mut ok = true;
            for blk in 0..it.n_blocks {
                let first = ones + (blk * it.code_bits) as usize;
                let word = sec[first..first + it.code_bits as usize]
                    .iter()
                    .fold(0u64, |acc, u| (acc << 1) | u64::from(u.abs() > threshold));
                *touches += it.code_bits as u64;
                match code.decode(word) {
                    Some(dec) => local = (local << m_c) | dec.msg,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok || local >= maps.id.occupancy(q) {
                continue;
            }
            let Ok(position) = maps.id.member_at(q, local) else {
                continue;
            };
            if position >= ens.n() {
                continue;
            }
            stats.sections_decoded += 1;
            out.candidates.insert(position);
            out.diagnostics.push(Candidate {
                position,
                copy,
                bucket: q,
                local,
                magnitude: med,
            });
        }
    }
    stats.candidates = out.candidates.len();
    (out, stats)
}

/// Signed-median estimates for `candidates` from the estimation slice `z`
/// of iteration `j`. Exact zeros are omitted.
pub fn estimate(ens: &Ensemble, j: u32, z: &[f64], candidates: &BTreeSet<u64>) -> Vec<(u64, f64)> {
    let mut touches = 0;
    estimate_counted(ens, j, z, candidates, &mut touches)
}

fn estimate_counted(
    ens: &Ensemble,
    j: u32,
    z: &[f64],
    candidates: &BTreeSet<u64>,
    touches: &mut u64,
) -> Vec<(u64, f64)> {
    let it = &ens.iterations()[j as usize];
    let mut vals = Vec::with_capacity(it.n_copies as usize);
    let mut out = Vec::with_capacity(candidates.len());
    for &lambda in candidates {
        vals.clear();
        for copy in 0..it.n_copies {
            let maps = ens.maps(j, copy);
            let q = maps.est.bucket_of(lambda);
            let row = copy as usize * it.est_rows as usize + q as usize;
            vals.push(z[row] * f64::from(maps.est_signs.sign_at(q, lambda)));
        }
        *touches += it.n_copies as u64;
        let b = symmetric_median(&mut vals);
        if b != 0.0 {
            out.push((lambda, b));
        }
    }
    out
}

/// Keeps the `budget` largest-magnitude entries; ties go to the lower index.
pub fn prune(a: &RecoveredVector, budget: usize) -> RecoveredVector {
    let mut entries: Vec<(u64, f64)> = a.iter().collect();
    entries.sort_by(|x, y| y.1.abs().total_cmp(&x.1.abs()).then(x.0.cmp(&y.0)));
    entries.truncate(budget);
    let mut out = RecoveredVector::default();
    for (i, v) in entries {
        out.entries.insert(i, v);
        if let Some(j) = a.origin(i) {
            out.origin.insert(i, j);
        }
    }
    out
}

/// Recovers `x_hat` from a sketch produced by `ens`.
pub fn recover(ens: &Ensemble, sketch: &SketchVector) -> Result<RecoveredVector> {
    recover_traced(ens, sketch, &DecodeOptions::default(), |_, _| {}).map(|(a, _)| a)
}

/// Full decoder. `observe(j, a)` is called with the accumulated estimate at
/// the start of every iteration `j` and once more with `j = J` at the end.
pub fn recover_traced(
    ens: &Ensemble,
    sketch: &SketchVector,
    opts: &DecodeOptions,
    mut observe: impl FnMut(u32, &RecoveredVector),
) -> Result<(RecoveredVector, DecodeStats)> {
    ens.check_sketch(sketch)?;
    if opts.prune == Some(0) {
        return Err(Error::InvalidParameter("prune budget must be at least 1".into()));
    }
    let mut stats = DecodeStats::default();
    let mut y = ens.permutation().unpermute(&sketch.values)?;
    stats.touches += y.len() as u64;
    let scale = y.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = opts.zero_floor * scale;

    let n_iter = ens.iterations().len() as u32;
    let mut a = RecoveredVector::default();
    for j in 0..n_iter {
        observe(j, &a);
        let it = &ens.iterations()[j as usize];
        let (ident, it_stats) =
            identify_counted(ens, j, &y[it.id_range()], floor, &mut stats.touches);
        stats.iterations.push(it_stats);
        let b = estimate_counted(
            ens,
            j,
            &y[it.est_range()],
            &ident.candidates,
            &mut stats.touches,
        );
        for &(lambda, v) in &b {
            a.add(lambda, v, j);
            for later in j + 1..n_iter {
                ens.for_each_in_iteration(later, lambda, |row, s| {
                    y[row] -= f64::from(s) * v;
                    stats.touches += 1;
                });
            }
        }
    }
    observe(n_iter, &a);
    if let Some(budget) = opts.prune {
        a = prune(&a, budget);
    }
    Ok((a, stats))
}
