//! The layered measurement ensemble.
//!
//! For iterations `j = 0..J` the unpermuted measurement vector is laid out as
//!
//! ```text
//! [ est copy 0 | ... | est copy R-1 | id copy 0 | ... | id copy R-1 ]   (iteration 0)
//! [ ... ]                                                               (iteration 1)
//! ```
//!
//! An estimation copy holds `est_rows` rows, one per estimation bucket. An
//! identification copy holds `id_buckets` sections of `section_len` rows:
//! `ones_rows` rows that sum the bucket, then `n_blocks` code blocks of
//! `code_bits` rows each, spelling the bucket-local index of every member.
//! Every physical row carries its own `±1` sign family. The global
//! permutation `P` is applied last.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::code::CodeTable;
use crate::error::{Error, Result};
use crate::hash::{
    derive_seed, next_prime, AffineHash, BucketMap, Permutation, Role, SeedPath, SignFamily,
};
use crate::matrix::SparseMatrix;

/// Largest signal length accepted; keeps `d` below 2^32.
pub const MAX_SIGNAL_LEN: u64 = 1 << 31;

/// Repetition schedule across iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepsMode {
    /// `R(j) = j + 1`.
    Linear,
    /// `R(j) = max(1, ceil(log2(j + 2)))`.
    Log,
}

impl RepsMode {
    pub fn copies(self, j: u32) -> u32 {
        match self {
            RepsMode::Linear => j + 1,
            RepsMode::Log => (f64::from(j + 2).log2().ceil() as u32).max(1),
        }
    }
}

impl std::str::FromStr for RepsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(RepsMode::Linear),
            "log" => Ok(RepsMode::Log),
            other => Err(Error::InvalidParameter(format!("unknown reps mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleParams {
    /// Signal length.
    pub n: u64,
    /// Target sparsity.
    pub k: u64,
    /// Oversampling: row counts and iteration count use `k / eps`.
    pub eps: f64,
    /// Geometric decay of identification buckets per iteration.
    pub c_id: f64,
    /// Geometric decay of estimation rows per iteration.
    pub c_est: f64,
    pub gamma_id: f64,
    pub gamma_est: f64,
    pub reps_mode: RepsMode,
    /// Message bits per code block; default `max(2, ceil(log2 log2 d))`.
    pub block_bits: Option<u32>,
    pub target_rel_dist: f64,
    /// Length of the all-ones run per section; default one code block.
    pub ones_rows: Option<u32>,
    pub master_seed: u64,
    pub max_measurements: usize,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            n: 1 << 14,
            k: 16,
            eps: 1.0,
            c_id: 2.0 / 3.0,
            c_est: 8.0 / 9.0,
            gamma_id: 2.5,
            gamma_est: 64.0,
            reps_mode: RepsMode::Linear,
            block_bits: None,
            target_rel_dist: 0.45,
            ones_rows: None,
            master_seed: 0,
            max_measurements: 1 << 26,
        }
    }
}

impl EnsembleParams {
    pub fn new(n: u64, k: u64) -> Self {
        Self {
            n,
            k,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n < 1 || self.n > MAX_SIGNAL_LEN {
            return bad(format!("n = {} outside 1..=2^31", self.n));
        }
        if self.k < 1 || self.k > self.n {
            return bad(format!("k = {} outside 1..=n", self.k));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps = {} must be positive", self.eps));
        }
        for (name, c) in [("c_id", self.c_id), ("c_est", self.c_est)] {
            if !(c > 0.5 && c < 1.0) {
                return bad(format!("{name} = {c} outside (1/2, 1)"));
            }
        }
        for (name, g) in [("gamma_id", self.gamma_id), ("gamma_est", self.gamma_est)] {
            if !(g > 0.0 && g.is_finite()) {
                return bad(format!("{name} = {g} must be positive"));
            }
        }
        if self.ones_rows == Some(0) {
            return bad("ones_rows must be at least 1".into());
        }
        Ok(())
    }

    /// Padded prime domain.
    pub fn domain(&self) -> u64 {
        next_prime(self.n)
    }

    /// `k / eps`.
    pub fn effective_k(&self) -> f64 {
        self.k as f64 / self.eps
    }

    /// `J = max(1, ceil(log2(k / eps)))`.
    pub fn n_iterations(&self) -> u32 {
        (self.effective_k().log2().ceil().max(1.0)) as u32
    }

    pub fn default_block_bits(d: u64) -> u32 {
        ((d as f64).log2().log2().ceil() as u32).max(2)
    }
}

/// Fitted constant in `max |column| <= beta * log2(k)^2 * log2(N/k)` for
/// linear repetition.
pub const COLUMN_SPARSITY_BETA: f64 = 2.5;

/// Fitted constant in `max |column| <= beta * log2(k) * log2(log2(k)) *
/// log2(N/k)` for logarithmic repetition.
pub const COLUMN_SPARSITY_BETA_LOG: f64 = 4.0;

/// Row geometry of one iteration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationLayout {
    pub j: u32,
    pub n_copies: u32,
    pub id_buckets: u64,
    pub id_slot_width: u64,
    /// Power of two bounding every bucket-local index.
    pub bucket_cap: u64,
    pub index_bits: u32,
    pub n_blocks: u32,
    pub ones_rows: u32,
    pub code_bits: u32,
    pub section_len: u64,
    pub est_rows: u64,
    pub est_slot_width: u64,
    /// First unpermuted row of this iteration.
    pub offset: usize,
}

impl IterationLayout {
    pub fn est_block_rows(&self) -> usize {
        self.n_copies as usize * self.est_rows as usize
    }

    pub fn id_copy_rows(&self) -> usize {
        (self.id_buckets * self.section_len) as usize
    }

    pub fn rows(&self) -> usize {
        self.est_block_rows() + self.n_copies as usize * self.id_copy_rows()
    }

    pub fn est_offset(&self, copy: u32) -> usize {
        self.offset + copy as usize * self.est_rows as usize
    }

    pub fn id_offset(&self, copy: u32) -> usize {
        self.offset + self.est_block_rows() + copy as usize * self.id_copy_rows()
    }

    /// Unpermuted rows used for identification (`w`).
    pub fn id_range(&self) -> std::ops::Range<usize> {
        self.id_offset(0)..self.offset + self.rows()
    }

    /// Unpermuted rows used for estimation (`z`).
    pub fn est_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.est_block_rows()
    }

    /// Local row of the first code bit of block `blk` in section `q`.
    #[inline]
    pub fn code_row(&self, q: u64, blk: u32) -> u64 {
        q * self.section_len + self.ones_rows as u64 + (blk * self.code_bits) as u64
    }
}

/// Hash state of one `(iteration, copy)`.
#[derive(Clone, Copy, Debug)]
pub struct CopyMaps {
    pub id: BucketMap,
    pub id_signs: SignFamily,
    pub est: BucketMap,
    pub est_signs: SignFamily,
}

/// Non-zeros of one column of `Phi`, in permuted row order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColumnView {
    pub entries: Vec<(usize, i8)>,
}

impl ColumnView {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Measurement vector `y = P [Phi^(0); ...; Phi^(J-1)] x`, tagged with the
/// digest of the ensemble that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchVector {
    pub values: Vec<f64>,
    pub digest: u64,
}

impl SketchVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-iteration row counts recorded in spec files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutDigest {
    pub d: u64,
    pub m: usize,
    pub iterations: Vec<IterationSummary>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub j: u32,
    pub copies: u32,
    pub id_buckets: u64,
    pub section_len: u64,
    pub est_rows: u64,
    pub rows: usize,
}

/// Row geometry only; cheap even when `m` is large.
pub fn layout(params: &EnsembleParams, code: &CodeTable) -> Result<(Vec<IterationLayout>, usize)> {
    params.validate()?;
    let d = params.domain();
    let keff = params.effective_k();
    let m_c = code.msg_bits();
    let n_c = code.code_bits();
    let ones = params.ones_rows.unwrap_or(n_c);
    let mut offset = 0usize;
    let mut its = Vec::new();
    for j in 0..params.n_iterations() {
        let n_copies = params.reps_mode.copies(j);
        let id_buckets = ((params.gamma_id * keff * params.c_id.powi(j as i32)).ceil() as u64).max(1);
        let est_rows = ((params.gamma_est * keff * params.c_est.powi(j as i32)).ceil() as u64).max(1);
        let id_slot_width = d.div_ceil(id_buckets);
        let bucket_cap = (2 * id_slot_width).next_power_of_two();
        let index_bits = bucket_cap.trailing_zeros();
        let n_blocks = index_bits.div_ceil(m_c).max(1);
        let section_len = ones as u64 + (n_blocks * n_c) as u64;
        let it = IterationLayout {
            j,
            n_copies,
            id_buckets,
            id_slot_width,
            bucket_cap,
            index_bits,
            n_blocks,
            ones_rows: ones,
            code_bits: n_c,
            section_len,
            est_rows,
            est_slot_width: d.div_ceil(est_rows),
            offset,
        };
        offset = offset
            .checked_add(it.rows())
            .filter(|&m| m <= params.max_measurements)
            .ok_or(Error::TooManyMeasurements {
                m: offset.saturating_add(it.rows()),
                cap: params.max_measurements,
            })?;
        its.push(it);
    }
    Ok((its, offset))
}

/// Builds the code table implied by `params`.
pub fn code_for(params: &EnsembleParams) -> Result<CodeTable> {
    params.validate()?;
    let bits = params
        .block_bits
        .unwrap_or_else(|| EnsembleParams::default_block_bits(params.domain()));
    CodeTable::build(bits, params.target_rel_dist)
}

/// A fully planned ensemble: layout, code, hash maps and permutation.
/// Immutable; share freely across threads.
#[derive(Clone, Debug)]
pub struct Ensemble {
    params: EnsembleParams,
    d: u64,
    code: CodeTable,
    iterations: Vec<IterationLayout>,
    maps: Vec<Vec<CopyMaps>>,
    m: usize,
    perm: Permutation,
    digest: u64,
}

impl Ensemble {
    pub fn plan(params: &EnsembleParams) -> Result<Self> {
        let code = code_for(params)?;
        Self::plan_with_code(params, code)
    }

    /// Plans with a caller-supplied code table (e.g. one read from a spec
    /// file). The table's block size must match the parameters.
    pub fn plan_with_code(params: &EnsembleParams, code: CodeTable) -> Result<Self> {
        let (iterations, m) = layout(params, &code)?;
        let d = params.domain();
        let seed = params.master_seed;
        let maps = iterations
            .iter()
            .map(|it| {
                (0..it.n_copies)
                    .map(|copy| {
                        let path = |role| SeedPath {
                            iteration: it.j,
                            role,
                            copy,
                            row: 0,
                        };
                        CopyMaps {
                            id: BucketMap::partition(
                                AffineHash::from_seed(derive_seed(seed, path(Role::IdBucket)), d),
                                it.id_slot_width,
                            ),
                            id_signs: SignFamily::new(seed, it.j, Role::IdSign, copy, d),
                            est: BucketMap::partition(
                                AffineHash::from_seed(derive_seed(seed, path(Role::EstBucket)), d),
                                it.est_slot_width,
                            ),
                            est_signs: SignFamily::new(seed, it.j, Role::EstSign, copy, d),
                        }
                    })
                    .collect()
            })
            .collect();
        let perm_seed = derive_seed(
            seed,
            SeedPath {
                iteration: 0,
                role: Role::Permutation,
                copy: 0,
                row: 0,
            },
        );
        let mut ens = Self {
            params: params.clone(),
            d,
            code,
            iterations,
            maps,
            m,
            perm: Permutation::random(m, perm_seed),
            digest: 0,
        };
        ens.digest = ens.compute_digest();
        Ok(ens)
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn n(&self) -> u64 {
        self.params.n
    }

    /// Padded prime domain size.
    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn code(&self) -> &CodeTable {
        &self.code
    }

    pub fn iterations(&self) -> &[IterationLayout] {
        &self.iterations
    }

    pub fn maps(&self, j: u32, copy: u32) -> &CopyMaps {
        &self.maps[j as usize][copy as usize]
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }

    pub fn layout_digest(&self) -> LayoutDigest {
        LayoutDigest {
            d: self.d,
            m: self.m,
            iterations: self
                .iterations
                .iter()
                .map(|it| IterationSummary {
                    j: it.j,
                    copies: it.n_copies,
                    id_buckets: it.id_buckets,
                    section_len: it.section_len,
                    est_rows: it.est_rows,
                    rows: it.rows(),
                })
                .collect(),
        }
    }

    fn compute_digest(&self) -> u64 {
        #[derive(Serialize)]
        struct Canon<'a> {
            params: &'a EnsembleParams,
            code: crate::code::CodeTableJson,
            layout: LayoutDigest,
        }
        let canon = Canon {
            params: &self.params,
            code: self.code.to_json(),
            layout: self.layout_digest(),
        };
        let bytes = serde_json::to_vec(&canon).expect("plain data serializes");
        let hash = Sha256::digest(&bytes);
        u64::from_le_bytes(hash[..8].try_into().expect("32-byte digest"))
    }

    fn check_position(&self, i: u64) -> Result<()> {
        if i >= self.params.n {
            return Err(Error::OutOfRange {
                index: i,
                limit: self.params.n,
            });
        }
        Ok(())
    }

    /// Calls `f(unpermuted_row, sign)` for every non-zero of column `i` in
    /// iteration `j`, in increasing row order.
    #[inline]
    pub fn for_each_in_iteration(&self, j: u32, i: u64, mut f: impl FnMut(usize, i8)) {
        let it = &self.iterations[j as usize];
        let copies = &self.maps[j as usize];
        for (copy, maps) in copies.iter().enumerate() {
            let q = maps.est.bucket_of(i);
            f(it.est_offset(copy as u32) + q as usize, maps.est_signs.sign_at(q, i));
        }
        let m_c = self.code.msg_bits();
        let mask = (1u64 << m_c) - 1;
        for (copy, maps) in copies.iter().enumerate() {
            let base = it.id_offset(copy as u32);
            let (q, loc) = maps.id.rank_of(i);
            let section = q * it.section_len;
            for l in 0..it.ones_rows as u64 {
                f(base + (section + l) as usize, maps.id_signs.sign_at(section + l, i));
            }
            for blk in 0..it.n_blocks {
                let shift = (it.n_blocks - 1 - blk) * m_c;
                let word = self.code.words()[((loc >> shift) & mask) as usize];
                let first = it.code_row(q, blk);
                for bit in 0..it.code_bits {
                    if self.code.bit(word, bit) {
                        let local = first + bit as u64;
                        f(base + local as usize, maps.id_signs.sign_at(local, i));
                    }
                }
            }
        }
    }

    /// Non-zeros of column `i` over all iterations, unpermuted.
    pub fn for_each_unpermuted(&self, i: u64, mut f: impl FnMut(usize, i8)) {
        for j in 0..self.iterations.len() as u32 {
            self.for_each_in_iteration(j, i, &mut f);
        }
    }

    /// Column `i` of `Phi` in permuted row order.
    pub fn column(&self, i: u64) -> Result<ColumnView> {
        self.check_position(i)?;
        let mut entries = Vec::new();
        self.for_each_unpermuted(i, |row, s| entries.push((self.perm.forward(row), s)));
        entries.sort_unstable_by_key(|&(r, _)| r);
        Ok(ColumnView { entries })
    }

    pub fn column_sparsity(&self, i: u64) -> Result<usize> {
        self.check_position(i)?;
        let mut n = 0;
        self.for_each_unpermuted(i, |_, _| n += 1);
        Ok(n)
    }

    pub fn zero_sketch(&self) -> SketchVector {
        SketchVector {
            values: vec![0.0; self.m],
            digest: self.digest,
        }
    }

    /// `sketch += delta * column(i)`.
    pub fn update(&self, sketch: &mut SketchVector, i: u64, delta: f64) -> Result<()> {
        self.update_counted(sketch, i, delta).map(|_| ())
    }

    /// [`Ensemble::update`], returning how many sketch entries were written
    /// (the sparsity of column `i`).
    pub fn update_counted(&self, sketch: &mut SketchVector, i: u64, delta: f64) -> Result<usize> {
        self.check_sketch(sketch)?;
        self.check_position(i)?;
        let values = &mut sketch.values;
        let mut written = 0;
        self.for_each_unpermuted(i, |row, s| {
            values[self.perm.forward(row)] += f64::from(s) * delta;
            written += 1;
        });
        Ok(written)
    }

    /// Encodes a dense signal of length `n`.
    pub fn encode(&self, x: &[f64]) -> Result<SketchVector> {
        if x.len() as u64 != self.params.n {
            return Err(Error::Dimension(format!(
                "signal of length {} for n = {}",
                x.len(),
                self.params.n
            )));
        }
        let mut sketch = self.zero_sketch();
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                self.update(&mut sketch, i as u64, v)?;
            }
        }
        Ok(sketch)
    }

    /// Encodes a sparse signal given as `(position, value)` pairs. Values are
    /// accumulated in the order given.
    pub fn encode_sparse(&self, entries: &[(u64, f64)]) -> Result<SketchVector> {
        let mut sketch = self.zero_sketch();
        for &(i, v) in entries {
            if v != 0.0 {
                self.update(&mut sketch, i, v)?;
            }
        }
        Ok(sketch)
    }

    /// Adds post-measurement noise in the permuted (observed) coordinates.
    pub fn add_measurement_noise(&self, sketch: &SketchVector, nu2: &[f64]) -> Result<SketchVector> {
        self.check_sketch(sketch)?;
        if nu2.len() != sketch.values.len() {
            return Err(Error::Dimension(format!(
                "noise of length {} for {} measurements",
                nu2.len(),
                sketch.values.len()
            )));
        }
        Ok(SketchVector {
            values: sketch.values.iter().zip(nu2).map(|(y, e)| y + e).collect(),
            digest: sketch.digest,
        })
    }

    pub fn check_sketch(&self, sketch: &SketchVector) -> Result<()> {
        if sketch.digest != self.digest {
            return Err(Error::DigestMismatch {
                expected: self.digest,
                found: sketch.digest,
            });
        }
        if sketch.values.len() != self.m {
            return Err(Error::Dimension(format!(
                "sketch of length {} for m = {}",
                sketch.values.len(),
                self.m
            )));
        }
        Ok(())
    }

    /// Materializes `Phi` (permuted rows). Toy sizes only.
    pub fn materialize(&self) -> Result<SparseMatrix> {
        let mut rows = vec![Vec::new(); self.m];
        for i in 0..self.params.n {
            for (r, s) in self.column(i)?.entries {
                rows[r].push((i as usize, f64::from(s)));
            }
        }
        SparseMatrix::from_rows(self.params.n as usize, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_plan() {
        let p = EnsembleParams::new(4, 1);
        let e = Ensemble::plan(&p).unwrap();
        assert_eq!(e.iterations().len(), 1);
        assert_eq!(e.iterations()[0].id_buckets, p.gamma_id.ceil() as u64);
        assert_eq!(e.d(), 5);
    }

    #[test]
    fn copies_schedule() {
        assert_eq!(
            (0..6).map(|j| RepsMode::Linear.copies(j)).collect::<Vec<_>>(),
            vec![1, 2, 3, 4, 5, 6]
        );
        assert_eq!(
            (0..8).map(|j| RepsMode::Log.copies(j)).collect::<Vec<_>>(),
            vec![1, 2, 2, 3, 3, 3, 3, 4]
        );
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = EnsembleParams::new(100, 0);
        assert!(p.validate().is_err());
        p.k = 101;
        assert!(p.validate().is_err());
        p.k = 5;
        p.c_id = 0.5;
        assert!(p.validate().is_err());
        p.c_id = 0.7;
        p.eps = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn measurement_cap() {
        let mut p = EnsembleParams::new(1 << 14, 16);
        p.max_measurements = 100;
        assert!(matches!(
            Ensemble::plan(&p),
            Err(Error::TooManyMeasurements { cap: 100, .. })
        ));
    }

    #[test]
    fn every_position_in_one_bucket() {
        let e = Ensemble::plan(&EnsembleParams::new(1000, 8).with_seed(3)).unwrap();
        for it in e.iterations() {
            assert!(it.bucket_cap * it.id_buckets >= e.d());
            for copy in 0..it.n_copies {
                let maps = e.maps(it.j, copy);
                for i in 0..e.n() {
                    let (q, loc) = maps.id.rank_of(i);
                    assert!(q < it.id_buckets);
                    assert!(loc < it.bucket_cap);
                    assert!(maps.est.bucket_of(i) < it.est_rows);
                }
            }
        }
    }

    #[test]
    fn column_guard() {
        let e = Ensemble::plan(&EnsembleParams::new(64, 4)).unwrap();
        assert!(e.column(64).is_err());
        assert!(e.column(63).is_ok());
    }

    #[test]
    fn update_inverse_and_single() {
        let e = Ensemble::plan(&EnsembleParams::new(256, 4).with_seed(9)).unwrap();
        let mut s = e.zero_sketch();
        e.update(&mut s, 17, 2.5).unwrap();
        let col = e.column(17).unwrap();
        let mut expect = vec![0.0; e.m()];
        for (r, v) in &col.entries {
            expect[*r] = 2.5 * f64::from(*v);
        }
        assert_eq!(s.values, expect);
        e.update(&mut s, 17, -2.5).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_checks() {
        let e = Ensemble::plan(&EnsembleParams::new(64, 4)).unwrap();
        let s = e.zero_sketch();
        assert!(e.add_measurement_noise(&s, &[1.0]).is_err());
        let zero = vec![0.0; e.m()];
        assert_eq!(e.add_measurement_noise(&s, &zero).unwrap(), s);
        let other = SketchVector {
            values: vec![0.0; e.m()],
            digest: e.digest() ^ 1,
        };
        assert!(matches!(
            e.add_measurement_noise(&other, &zero),
            Err(Error::DigestMismatch { .. })
        ));
    }

    #[test]
    fn deterministic_plan() {
        let p = EnsembleParams::new(5000, 16).with_seed(77);
        let a = Ensemble::plan(&p).unwrap();
        let b = Ensemble::plan(&p).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.permutation(), b.permutation());
        assert_eq!(a.column(1234).unwrap(), b.column(1234).unwrap());
        let c = Ensemble::plan(&p.clone().with_seed(78)).unwrap();
        assert_ne!(a.digest(), c.digest());
    }
}
