//! Short block error-correcting code used to spell out bucket-local indices.
//!
//! The code is an explicit list of codewords found by greedy lexicographic
//! search, so it may be non-linear. Words are stored as `u64` with the first
//! code row in the most significant of the `code_bits` low bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on `code_bits / msg_bits` for any table this module builds.
pub const MAX_RATE: u32 = 6;

/// Largest supported message size (a 4096-word table).
pub const MAX_MSG_BITS: u32 = 12;

/// Outcome of a successful nearest-neighbour decode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub msg: u64,
    pub dist: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeTable {
    msg_bits: u32,
    code_bits: u32,
    min_dist: u32,
    words: Vec<u64>,
}

/// JSON form: words are hex strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeTableJson {
    pub msg_bits: u32,
    pub code_bits: u32,
    pub min_dist: u32,
    pub words: Vec<String>,
}

impl CodeTable {
    /// Greedy lexicode search. For `n = msg_bits, msg_bits + 1, ...` the
    /// required distance is `max(3, ceil(target_rel_dist * n))`; the first
    /// length at which the greedy scan collects `2^msg_bits` words wins.
    pub fn build(msg_bits: u32, target_rel_dist: f64) -> Result<Self> {
        if msg_bits == 0 || msg_bits > MAX_MSG_BITS {
            return Err(Error::InvalidParameter(format!(
                "msg_bits must be in 1..={MAX_MSG_BITS}, got {msg_bits}"
            )));
        }
        if !(target_rel_dist > 0.0 && target_rel_dist < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "relative distance must lie in (0, 1/2), got {target_rel_dist}"
            )));
        }
        let want = 1usize << msg_bits;
        for n in msg_bits..=(MAX_RATE * msg_bits).min(63) {
            let dist = ((target_rel_dist * n as f64).ceil() as u32).max(3);
            if dist > n {
                continue;
            }
            let mut words: Vec<u64> = Vec::with_capacity(want);
            let limit = 1u64 << n;
            let mut v = 0u64;
            while v < limit && words.len() < want {
                if words.iter().all(|&w| (w ^ v).count_ones() >= dist) {
                    words.push(v);
                }
                v += 1;
            }
            if words.len() == want {
                return Ok(Self {
                    msg_bits,
                    code_bits: n,
                    min_dist: dist,
                    words,
                });
            }
        }
        Err(Error::CodeSearchExhausted {
            msg_bits,
            rel_dist: target_rel_dist,
        })
    }

    pub fn msg_bits(&self) -> u32 {
        self.msg_bits
    }

    pub fn code_bits(&self) -> u32 {
        self.code_bits
    }

    /// Guaranteed minimum pairwise distance.
    pub fn min_dist(&self) -> u32 {
        self.min_dist
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Number of correctable bit errors per block.
    pub fn radius(&self) -> u32 {
        (self.min_dist - 1) / 2
    }

    /// Smallest pairwise distance actually present in the table.
    pub fn audit_distance(&self) -> u32 {
        let mut best = u32::MAX;
        for (i, &a) in self.words.iter().enumerate() {
            for &b in &self.words[i + 1..] {
                best = best.min((a ^ b).count_ones());
            }
        }
        best
    }

    pub fn encode(&self, msg: u64) -> Result<u64> {
        self.words
            .get(msg as usize)
            .copied()
            .ok_or(Error::OutOfRange {
                index: msg,
                limit: self.words.len() as u64,
            })
    }

    /// Bit `pos` (0 = first code row) of a codeword.
    #[inline]
    pub fn bit(&self, word: u64, pos: u32) -> bool {
        (word >> (self.code_bits - 1 - pos)) & 1 == 1
    }

    /// Nearest-neighbour decoding within the unique-decoding radius. Returns
    /// `None` when no codeword lies within `radius()`, which also covers
    /// exact ties.
    pub fn decode(&self, noisy: u64) -> Option<Decoded> {
        let radius = self.radius();
        let mut best: Option<Decoded> = None;
        for (msg, &w) in self.words.iter().enumerate() {
            let dist = (w ^ noisy).count_ones();
            if dist <= radius {
                // at most one word can sit inside the radius
                best = Some(Decoded {
                    msg: msg as u64,
                    dist,
                });
                break;
            }
        }
        best
    }

    pub fn to_json(&self) -> CodeTableJson {
        let width = self.code_bits.div_ceil(4) as usize;
        CodeTableJson {
            msg_bits: self.msg_bits,
            code_bits: self.code_bits,
            min_dist: self.min_dist,
            words: self
                .words
                .iter()
                .map(|w| format!("{w:0width$x}"))
                .collect(),
        }
    }

    pub fn from_json(j: &CodeTableJson) -> Result<Self> {
        let words = j
            .words
            .iter()
            .map(|s| {
                u64::from_str_radix(s, 16)
                    .map_err(|e| Error::Malformed(format!("codeword {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if words.len() != 1usize << j.msg_bits
            || j.code_bits > 63
            || words.iter().any(|&w| w >> j.code_bits != 0)
        {
            return Err(Error::Malformed("code table shape".into()));
        }
        let t = Self {
            msg_bits: j.msg_bits,
            code_bits: j.code_bits,
            min_dist: j.min_dist,
            words,
        };
        if t.min_dist < 3 || t.audit_distance() < t.min_dist {
            return Err(Error::Malformed("code table violates its distance".into()));
        }
        Ok(t)
    }
}

/// Splits `local` into `ceil(bits_total / block_bits)` blocks, most
/// significant block first. The high block is zero-padded on the left.
pub fn chunk_index(local: u64, bits_total: u32, block_bits: u32) -> Result<Vec<u64>> {
    if block_bits == 0 || block_bits > 32 || bits_total > 63 {
        return Err(Error::InvalidParameter(format!(
            "block_bits={block_bits}, bits_total={bits_total}"
        )));
    }
    if local >> bits_total != 0 {
        return Err(Error::OutOfRange {
            index: local,
            limit: 1 << bits_total,
        });
    }
    let n_blocks = bits_total.div_ceil(block_bits).max(1);
    let mask = (1u64 << block_bits) - 1;
    Ok((0..n_blocks)
        .rev()
        .map(|b| (local >> (b * block_bits)) & mask)
        .collect())
}

/// Inverse of [`chunk_index`].
pub fn assemble_index(blocks: &[u64], block_bits: u32) -> u64 {
    blocks
        .iter()
        .fold(0u64, |acc, &b| (acc << block_bits) | b)
}
