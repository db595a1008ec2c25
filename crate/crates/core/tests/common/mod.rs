//! Independent reference constructions shared by the integration tests.
//! Everything here is rebuilt from the written definitions using only the
//! hash primitives, never the ensemble's own layout or column code.

#![allow(dead_code)]

use rand::Rng;
use srs_core::ensemble::EnsembleParams;
use srs_core::hash::{derive_seed, AffineHash, Role, SeedPath};
use srs_core::matrix::SparseMatrix;

pub type Dense = Vec<Vec<f64>>;

pub fn random_sparse_dense(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> Dense {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.random::<f64>() < density {
                        f64::from(rng.random_range(-4i32..=4))
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Random pattern with at most `h` non-zeros per row.
pub fn random_pattern(rng: &mut impl Rng, rows: usize, cols: usize, h: usize) -> Dense {
    (0..rows)
        .map(|_| {
            let mut row = vec![0.0; cols];
            let nnz = rng.random_range(0..=h.min(cols));
            for c in rand::seq::index::sample(rng, cols, nnz) {
                row[c] = f64::from(rng.random_range(1i32..=3)) * if rng.random() { 1.0 } else { -1.0 };
            }
            row
        })
        .collect()
}

pub fn dense_matvec(m: &Dense, x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn dense_elementwise(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x * y).collect())
        .collect()
}

pub fn dense_stack(a: &Dense, b: &Dense) -> Dense {
    a.iter().chain(b).cloned().collect()
}

/// Entry-wise semi-direct product: the `j`-th non-zero `a` of row `k` of
/// `pattern` at column `l` puts `a * sel[i][j]` at row `i + k * r2`.
pub fn dense_semi_direct(sel: &Dense, pattern: &Dense) -> Dense {
    let r2 = sel.len();
    let cols = pattern.first().map_or(0, |r| r.len());
    let mut out = vec![vec![0.0; cols]; pattern.len() * r2];
    for (k, prow) in pattern.iter().enumerate() {
        let mut j = 0;
        for (l, &a) in prow.iter().enumerate() {
            if a != 0.0 {
                for i in 0..r2 {
                    out[i + k * r2][l] = a * sel[i][j];
                }
                j += 1;
            }
        }
    }
    out
}

/// Non-zero entries of `rho * x` in column order, zero-padded to `h`.
pub fn compact(rho: &[f64], x: &[f64], h: usize) -> Vec<f64> {
    let mut v: Vec<f64> = rho
        .iter()
        .zip(x)
        .filter(|(r, _)| **r != 0.0)
        .map(|(r, xi)| r * xi)
        .collect();
    v.resize(h, 0.0);
    v
}

pub fn trial_division_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            return false;
        }
        p += 1;
    }
    true
}

pub fn smallest_prime_at_least(n: u64) -> u64 {
    (n.max(2)..).find(|&p| trial_division_prime(p)).unwrap()
}

/// Greedy lexicographic code: returns `(length, distance, words)`.
pub fn lexicode(msg_bits: u32, rel: f64) -> (u32, u32, Vec<u64>) {
    let want = 1usize << msg_bits;
    for n in msg_bits.. {
        let dist = ((rel * n as f64).ceil() as u32).max(3);
        if dist > n {
            continue;
        }
        let mut words: Vec<u64> = Vec::new();
        for v in 0..1u64 << n {
            if words.len() == want {
                break;
            }
            if words.iter().all(|w| (w ^ v).count_ones() >= dist) {
                words.push(v);
            }
        }
        if words.len() == want {
            return (n, dist, words);
        }
    }
    unreachable!()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefIteration {
    pub copies: u64,
    pub id_buckets: u64,
    pub slot_width: u64,
    pub index_bits: u32,
    pub n_blocks: u32,
    pub section_len: u64,
    pub est_rows: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefLayout {
    pub d: u64,
    pub msg_bits: u32,
    pub code_bits: u32,
    pub words: Vec<u64>,
    pub ones_rows: u64,
    pub iterations: Vec<RefIteration>,
    pub m: u64,
}

/// Closed-form row counts from the parameter definitions.
pub fn reference_layout(p: &EnsembleParams) -> RefLayout {
    let d = smallest_prime_at_least(p.n);
    let keff = p.k as f64 / p.eps;
    let iters = keff.log2().ceil().max(1.0) as u32;
    let msg_bits = p
        .block_bits
        .unwrap_or_else(|| ((d as f64).log2().log2().ceil() as u32).max(2));
    let (code_bits, _, words) = lexicode(msg_bits, p.target_rel_dist);
    let ones_rows = p.ones_rows.map_or(code_bits as u64, u64::from);
    let mut m = 0;
    let iterations = (0..iters)
        .map(|j| {
            let copies = match p.reps_mode {
                srs_core::RepsMode::Linear => j as u64 + 1,
                srs_core::RepsMode::Log => ((j as f64 + 2.0).log2().ceil() as u64).max(1),
            };
            let id_buckets = ((p.gamma_id * keff * p.c_id.powi(j as i32)).ceil() as u64).max(1);
            let est_rows = ((p.gamma_est * keff * p.c_est.powi(j as i32)).ceil() as u64).max(1);
            let slot_width = d.div_ceil(id_buckets);
            // smallest power of two that is at least twice the slot width
            let mut cap = 1u64;
            while cap < 2 * slot_width {
                cap *= 2;
            }
            let index_bits = cap.trailing_zeros();
            let n_blocks = index_bits.div_ceil(msg_bits).max(1);
            let section_len = ones_rows + (n_blocks * code_bits) as u64;
            m += copies * (est_rows + id_buckets * section_len);
            RefIteration {
                copies,
                id_buckets,
                slot_width,
                index_bits,
                n_blocks,
                section_len,
                est_rows,
            }
        })
        .collect();
    RefLayout {
        d,
        msg_bits,
        code_bits,
        words,
        ones_rows,
        iterations,
        m,
    }
}

fn hash_for(master: u64, j: u32, role: Role, copy: u32, row: u64, d: u64) -> AffineHash {
    AffineHash::from_seed(
        derive_seed(master, SeedPath { iteration: j, role, copy, row }),
        d,
    )
}

fn sign_of(h: &AffineHash, i: u64, d: u64) -> f64 {
    if h.eval(i) < d.div_ceil(2) {
        1.0
    } else {
        -1.0
    }
}

/// Unpermuted `[Phi^(0); ...; Phi^(J-1)]` assembled with the matrix
/// combinators: each iteration stacks its estimation copies `S (.) B_est`
/// and then its identification copies `S (.) (C semi-direct B_id)`.
/// Identification buckets are built in hash space so that the position of
/// an element inside its bucket row equals its rank `h(i) mod width`.
pub fn reference_phi(p: &EnsembleParams) -> SparseMatrix {
    let lay = reference_layout(p);
    let n = p.n as usize;
    let d = lay.d;
    let seed = p.master_seed;
    let mut blocks: Vec<SparseMatrix> = Vec::new();
    for (j, it) in lay.iterations.iter().enumerate() {
        let j = j as u32;
        for copy in 0..it.copies as u32 {
            let hb = hash_for(seed, j, Role::EstBucket, copy, 0, d);
            let width = d.div_ceil(it.est_rows);
            let mut pattern = vec![vec![0.0; n]; it.est_rows as usize];
            let mut signs = vec![vec![0.0; n]; it.est_rows as usize];
            for i in 0..p.n {
                let q = (hb.eval(i) / width) as usize;
                pattern[q][i as usize] = 1.0;
            }
            for (q, srow) in signs.iter_mut().enumerate() {
                let hs = hash_for(seed, j, Role::EstSign, copy, q as u64, d);
                for i in 0..p.n {
                    srow[i as usize] = sign_of(&hs, i, d);
                }
            }
            let e = SparseMatrix::from_dense(&dense_elementwise(&signs, &pattern), n).unwrap();
            blocks.push(e);
        }
        // selector: ones rows, then the codeword bits of each index block
        let w = it.slot_width as usize;
        let mut sel = vec![vec![0.0; w]; it.section_len as usize];
        for r in 0..w {
            for l in 0..lay.ones_rows as usize {
                sel[l][r] = 1.0;
            }
            for blk in 0..it.n_blocks {
                let shift = (it.n_blocks - 1 - blk) * lay.msg_bits;
                let chunk = (r as u64 >> shift) & ((1 << lay.msg_bits) - 1);
                let word = lay.words[chunk as usize];
                for b in 0..lay.code_bits {
                    let bit = (word >> (lay.code_bits - 1 - b)) & 1;
                    let row = lay.ones_rows as usize + (blk * lay.code_bits + b) as usize;
                    sel[row][r] = bit as f64;
                }
            }
        }
        for copy in 0..it.copies as u32 {
            let hb = hash_for(seed, j, Role::IdBucket, copy, 0, d);
            // bucket pattern over hash values 0..d
            let mut hpattern = vec![vec![0.0; d as usize]; it.id_buckets as usize];
            for h in 0..d {
                hpattern[(h / it.slot_width) as usize][h as usize] = 1.0;
            }
            let hspace = dense_semi_direct(&sel, &hpattern);
            // pull back to positions: column i of the result is column h(i)
            let rows = hspace.len();
            let mut pulled = vec![vec![0.0; n]; rows];
            for i in 0..p.n {
                let h = hb.eval(i) as usize;
                for r in 0..rows {
                    pulled[r][i as usize] = hspace[r][h];
                }
            }
            let mut signs = vec![vec![0.0; n]; rows];
            for (r, srow) in signs.iter_mut().enumerate() {
                let hs = hash_for(seed, j, Role::IdSign, copy, r as u64, d);
                for i in 0..p.n {
                    srow[i as usize] = sign_of(&hs, i, d);
                }
            }
            blocks.push(SparseMatrix::from_dense(&dense_elementwise(&signs, &pulled), n).unwrap());
        }
    }
    blocks
        .into_iter()
        .reduce(|a, b| a.row_direct_sum(&b).unwrap())
        .unwrap()
}
