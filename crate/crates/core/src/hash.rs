//! Pairwise-independent affine hashing over a prime field.
//!
//! Everything random in the measurement ensemble is derived from a single
//! 64-bit master seed through [`derive_seed`], so any entry of the matrix can
//! be regenerated on demand from its structural path.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deterministic primality test by trial division. Domains here are at most
/// 2^32, so this is a few thousand divisions at worst.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut f = 3u64;
    while f * f <= n {
        if n % f == 0 {
            return false;
        }
        f += 2;
    }
    true
}

/// Smallest prime `>= n`.
pub fn next_prime(n: u64) -> u64 {
    let mut p = n.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % m as u128) as u64;
        }
        base = ((base as u128 * base as u128) % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// What a derived seed is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Role {
    IdBucket = 1,
    IdSign = 2,
    EstBucket = 3,
    EstSign = 4,
    Permutation = 5,
    Trial = 6,
    Signal = 7,
    Noise = 8,
}

/// Structural address of one seed: `(iteration, role, copy, row)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedPath {
    pub iteration: u32,
    pub role: Role,
    pub copy: u32,
    pub row: u64,
}

/// Counter-based seed derivation. The path is folded into the master seed
/// one field at a time through SplitMix64, so seeds are stable across runs
/// and platforms and independent of evaluation order.
pub fn derive_seed(master: u64, path: SeedPath) -> u64 {
    let mut s = mix64(master ^ 0x5352_535f_7365_6564);
    s = mix64(s ^ ((path.role as u64) << 56 | path.iteration as u64));
    s = mix64(s ^ path.copy as u64);
    mix64(s ^ path.row)
}

#[inline]
fn coeffs_from_seed(seed: u64, d: u64) -> (u64, u64) {
    debug_assert!((2..1 << 32).contains(&d));
    let s1 = mix64(seed);
    let s2 = mix64(s1);
    (1 + s1 % (d - 1), s2 % d)
}

/// `i -> (a*i + b) mod d` over the prime field `Z_d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineHash {
    a: u64,
    b: u64,
    d: u64,
    a_inv: u64,
}

impl AffineHash {
    pub fn new(a: u64, b: u64, d: u64) -> Result<Self> {
        if d >= 1 << 32 || !is_prime(d) {
            return Err(Error::InvalidParameter(format!(
                "modulus {d} must be a prime below 2^32"
            )));
        }
        if a == 0 || a >= d || b >= d {
            return Err(Error::InvalidParameter(format!(
                "hash coefficients a={a}, b={b} out of range for d={d}"
            )));
        }
        Ok(Self {
            a,
            b,
            d,
            a_inv: pow_mod(a, d - 2, d),
        })
    }

    /// Draws `(a, b)` from a 64-bit seed. `d` must already be prime.
    pub fn from_seed(seed: u64, d: u64) -> Self {
        let (a, b) = coeffs_from_seed(seed, d);
        Self {
            a,
            b,
            d,
            a_inv: pow_mod(a, d - 2, d),
        }
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn modulus(&self) -> u64 {
        self.d
    }

    #[inline]
    pub fn eval(&self, i: u64) -> u64 {
        (self.a * (i % self.d) + self.b) % self.d
    }

    /// The unique `i < d` with `eval(i) == h`.
    #[inline]
    pub fn invert(&self, h: u64) -> u64 {
        let shifted = (h % self.d + self.d - self.b) % self.d;
        (shifted * self.a_inv) % self.d
    }

    /// `+1` for hash values in the lower half `[0, ceil(d/2))`, `-1` otherwise.
    #[inline]
    pub fn sign(&self, i: u64) -> i8 {
        if self.eval(i) < self.d.div_ceil(2) {
            1
        } else {
            -1
        }
    }
}

/// Buckets of consecutive hash values: `bucket_of(i) = eval(i) / slot_width`.
///
/// With `active_width < d` the map doubles as a Bernoulli row: position `i`
/// is "on" iff `eval(i) < active_width`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BucketMap {
    hash: AffineHash,
    slot_width: u64,
    active_width: u64,
}

impl BucketMap {
    pub fn new(hash: AffineHash, slot_width: u64, active_width: u64) -> Result<Self> {
        if slot_width == 0 || active_width > hash.d {
            return Err(Error::InvalidParameter(format!(
                "slot width {slot_width} / active width {active_width} invalid for d={}",
                hash.d
            )));
        }
        Ok(Self {
            hash,
            slot_width,
            active_width,
        })
    }

    /// A partition of the whole domain into buckets of `slot_width`.
    pub fn partition(hash: AffineHash, slot_width: u64) -> Self {
        Self {
            hash,
            slot_width: slot_width.max(1),
            active_width: hash.d,
        }
    }

    pub fn hash(&self) -> &AffineHash {
        &self.hash
    }

    pub fn slot_width(&self) -> u64 {
        self.slot_width
    }

    /// Number of non-empty buckets, `ceil(d / slot_width)`.
    pub fn n_buckets(&self) -> u64 {
        self.hash.d.div_ceil(self.slot_width)
    }

    #[inline]
    pub fn bucket_of(&self, i: u64) -> u64 {
        self.hash.eval(i) / self.slot_width
    }

    /// `(bucket, rank within bucket)`.
    #[inline]
    pub fn rank_of(&self, i: u64) -> (u64, u64) {
        let h = self.hash.eval(i);
        (h / self.slot_width, h % self.slot_width)
    }

    /// The position holding rank `r` in bucket `q`; inverse of [`rank_of`](Self::rank_of).
    pub fn member_at(&self, q: u64, r: u64) -> Result<u64> {
        let h = q
            .checked_mul(self.slot_width)
            .and_then(|x| x.checked_add(r))
            .filter(|&h| r < self.slot_width && h < self.hash.d)
            .ok_or(Error::OutOfRange {
                index: r,
                limit: self.occupancy(q),
            })?;
        Ok(self.hash.invert(h))
    }

    /// How many domain positions land in bucket `q`.
    pub fn occupancy(&self, q: u64) -> u64 {
        let lo = q.saturating_mul(self.slot_width);
        if lo >= self.hash.d {
            0
        } else {
            self.slot_width.min(self.hash.d - lo)
        }
    }

    /// Bernoulli-row membership.
    #[inline]
    pub fn contains(&self, i: u64) -> bool {
        self.hash.eval(i) < self.active_width
    }
}

/// Independent per-row `±1` families. Row `r` uses its own [`AffineHash`]
/// drawn from `derive_seed(master, (iteration, role, copy, r))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignFamily {
    master: u64,
    iteration: u32,
    role: Role,
    copy: u32,
    d: u64,
}

impl SignFamily {
    pub fn new(master: u64, iteration: u32, role: Role, copy: u32, d: u64) -> Self {
        Self {
            master,
            iteration,
            role,
            copy,
            d,
        }
    }

    pub fn row_hash(&self, row: u64) -> AffineHash {
        let seed = derive_seed(
            self.master,
            SeedPath {
                iteration: self.iteration,
                role: self.role,
                copy: self.copy,
                row,
            },
        );
        AffineHash::from_seed(seed, self.d)
    }

    #[inline]
    pub fn sign_at(&self, row: u64, i: u64) -> i8 {
        // same draw as row_hash, without computing the inverse of a
        let seed = derive_seed(
            self.master,
            SeedPath {
                iteration: self.iteration,
                role: self.role,
                copy: self.copy,
                row,
            },
        );
        let (a, b) = coeffs_from_seed(seed, self.d);
        if (a * (i % self.d) + b) % self.d < self.d.div_ceil(2) {
            1
        } else {
            -1
        }
    }
}

/// An explicit permutation of `[0, m)`.
///
/// `permute` sends entry `r` of its input to position `forward[r]`;
/// `unpermute` undoes it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl Permutation {
    pub fn identity(m: usize) -> Self {
        let forward: Vec<u32> = (0..m as u32).collect();
        Self {
            inverse: forward.clone(),
            forward,
        }
    }

    /// Fisher-Yates driven by ChaCha8 seeded from `seed`.
    pub fn random(m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut forward: Vec<u32> = (0..m as u32).collect();
        for i in (1..m).rev() {
            // multiply-shift range reduction; bias is below 2^-32 for m < 2^32
            let j = ((rng.next_u64() as u128 * (i as u128 + 1)) >> 64) as usize;
            forward.swap(i, j);
        }
        let mut inverse = vec![0u32; m];
        for (r, &p) in forward.iter().enumerate() {
            inverse[p as usize] = r as u32;
        }
        Self { forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn forward(&self, r: usize) -> usize {
        self.forward[r] as usize
    }

    #[inline]
    pub fn inverse(&self, p: usize) -> usize {
        self.inverse[p] as usize
    }

    pub fn permute(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        let mut out = vec![0.0; v.len()];
        for (r, &x) in v.iter().enumerate() {
            out[self.forward[r] as usize] = x;
        }
        Ok(out)
    }

    pub fn unpermute(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v.len())?;
        Ok(self.forward.iter().map(|&p| v[p as usize]).collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.forward.len() {
            return Err(Error::Dimension(format!(
                "vector of length {len} against permutation of {}",
                self.forward.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        assert_eq!(next_prime(7), 7);
        assert_eq!(next_prime(8), 11);
        assert_eq!(next_prime(1 << 16), 65537);
        assert_eq!(next_prime(2), 2);
        assert!(!is_prime(1));
    }

    #[test]
    fn bucket_examples() {
        let id = BucketMap::partition(AffineHash::new(1, 0, 7).unwrap(), 2);
        assert_eq!(id.bucket_of(3), 1);
        assert_eq!(id.bucket_of(0), 0);
        assert_eq!(id.rank_of(0), (0, 0));
        assert_eq!(id.member_at(1, 0).unwrap(), 2);

        let m = BucketMap::partition(AffineHash::new(3, 1, 7).unwrap(), 2);
        // (3*4 + 1) mod 7 = 6, 6 / 2 = 3
        assert_eq!(m.bucket_of(4), 3);
        // q*B + r = 7 is not a hash value in Z_7
        assert!(m.member_at(3, 1).is_err());
        assert_eq!(m.member_at(3, 0).unwrap(), 4);
        // 3*i + 1 = 6 -> i = 3^{-1} * 5 = 5 * 5 mod 7 = 4
        assert_eq!(m.hash().invert(6), 4);
        // 3*i + 1 = 0 -> i = 5 * 6 mod 7 = 2
        assert_eq!(m.hash().invert(0), 2);
    }

    #[test]
    fn member_rank_round_trip_small() {
        for a in 1..7 {
            for b in 0..7 {
                let m = BucketMap::partition(AffineHash::new(a, b, 7).unwrap(), 2);
                for i in 0..7 {
                    let (q, r) = m.rank_of(i);
                    assert_eq!(m.member_at(q, r).unwrap(), i);
                }
            }
        }
    }

    #[test]
    fn member_out_of_bucket_rejected() {
        let m = BucketMap::partition(AffineHash::new(3, 1, 7).unwrap(), 3);
        assert!(m.member_at(0, 3).is_err());
        // last bucket holds only hash value 6
        assert_eq!(m.occupancy(2), 1);
        assert!(m.member_at(2, 1).is_err());
        assert_eq!(m.occupancy(3), 0);
    }

    #[test]
    fn large_modulus_bucket_scan() {
        let d = 65537;
        let m = BucketMap::partition(AffineHash::from_seed(99, d), 300);
        let q = m.bucket_of(12345);
        let mut found = Vec::new();
        for i in 0..d {
            if m.bucket_of(i) == q {
                found.push((m.rank_of(i).1, i));
            }
        }
        found.sort();
        assert_eq!(found.len() as u64, m.occupancy(q));
        for (r, i) in found {
            assert_eq!(m.member_at(q, r).unwrap(), i);
        }
    }

    #[test]
    fn bernoulli_row_counts() {
        let d = 101;
        for seed in 0..20 {
            let m = BucketMap::new(AffineHash::from_seed(seed, d), 1, 17).unwrap();
            assert_eq!((0..d).filter(|&i| m.contains(i)).count(), 17);
            // restricted to real positions i < n the count moves by at most d - n
            let n = 90;
            let c = (0..n).filter(|&i| m.contains(i)).count() as i64;
            assert!((c - 17).abs() <= (d - n) as i64);
        }
    }

    #[test]
    fn sign_bias_is_one_for_odd_prime() {
        for seed in 0..50 {
            let h = AffineHash::from_seed(seed, 101);
            let s: i64 = (0..101).map(|i| h.sign(i) as i64).sum();
            assert_eq!(s, 1);
        }
    }

    #[test]
    fn sign_deterministic() {
        let f = SignFamily::new(42, 1, Role::IdSign, 0, 101);
        assert_eq!(f.sign_at(3, 17), f.sign_at(3, 17));
        for i in 0..101 {
            assert_eq!(f.sign_at(5, i), f.row_hash(5).sign(i));
        }
    }

    #[test]
    fn seed_paths_are_distinct() {
        let base = SeedPath {
            iteration: 0,
            role: Role::IdBucket,
            copy: 0,
            row: 0,
        };
        let a = derive_seed(1, base);
        assert_ne!(a, derive_seed(2, base));
        assert_ne!(a, derive_seed(1, SeedPath { row: 1, ..base }));
        assert_ne!(a, derive_seed(1, SeedPath { copy: 1, ..base }));
        assert_ne!(a, derive_seed(1, SeedPath { role: Role::IdSign, ..base }));
    }

    #[test]
    fn permutation_round_trip() {
        let p = Permutation::random(1, 5);
        assert_eq!(p, Permutation::identity(1));
        let p = Permutation::random(37, 5);
        let v: Vec<f64> = (0..37).map(|x| x as f64).collect();
        assert_eq!(p.unpermute(&p.permute(&v).unwrap()).unwrap(), v);
        for r in 0..37 {
            assert_eq!(p.inverse(p.forward(r)), r);
        }
        assert!(p.permute(&v[..3]).is_err());
    }
}
