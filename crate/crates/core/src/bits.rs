//! Fixed-length binary vectors packed into 64-bit words.
//!
//! Pairwise Hamming distances over whole populations are on the hot path of the
//! state-feature computation, so candidates are stored packed and distances run
//! on `XOR` + `count_ones` per word.

use rand::Rng;

/// A fixed-length vector of bits. Bit `i` of a vector of length `d` is valid
/// for `i < d`; storage bits past the end are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryVector {
    words: Vec<u64>,
    len: usize,
}

impl BinaryVector {
    /// All-zero vector of the given length.
    pub fn zeros(len: usize) -> Self {
        BinaryVector {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    /// All-one vector of the given length.
    pub fn ones(len: usize) -> Self {
        let mut v = BinaryVector {
            words: vec![!0u64; len.div_ceil(64)],
            len,
        };
        v.mask_tail();
        v
    }

    /// Uniformly random vector: each bit is 0 or 1 with probability 1/2.
    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        let mut v = BinaryVector {
            words: (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect(),
            len,
        };
        v.mask_tail();
        v
    }

    /// Builds a vector from 0/1 bytes.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BinaryVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector from a string of `0`/`1` characters; index 0 is the
    /// leftmost character. Returns `None` on any other character.
    pub fn from_bitstring(s: &str) -> Option<Self> {
        let mut v = BinaryVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return None,
            }
        }
        Some(v)
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Hamming distance to another vector of the same length.
    ///
    /// Panics if the lengths differ; use [`try_hamming`] for a checked variant.
    pub fn hamming(&self, other: &Self) -> usize {
        assert_eq!(self.len, other.len, "hamming distance needs equal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// In-place bitwise OR with another vector of the same length.
    pub fn union_with(&mut self, other: &Self) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Indices of the set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut mask = w;
            std::iter::from_fn(move || {
                if mask == 0 {
                    return None;
                }
                let i = mask.trailing_zeros() as usize;
                mask &= mask - 1;
                Some(wi * 64 + i)
            })
        })
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl std::fmt::Debug for BinaryVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.len <= 64 {
            write!(f, "BinaryVector({})", self.to_bitstring())
        } else {
            write!(f, "BinaryVector(len={}, ones={})", self.len, self.count_ones())
        }
    }
}

/// Checked Hamming distance; fails when the two vectors differ in length.
pub fn try_hamming(a: &BinaryVector, b: &BinaryVector) -> Result<usize, LengthMismatch> {
    if a.len() != b.len() {
        return Err(LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.hamming(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("binary vectors have different lengths ({left} vs {right})")]
pub struct LengthMismatch {
    pub left: usize,
    pub right: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn set_get_flip_roundtrip() {
        let mut v = BinaryVector::zeros(130);
        assert_eq!(v.count_ones(), 0);
        v.set(0, true);
        v.set(64, true);
        v.set(129, true);
        assert!(v.get(0) && v.get(64) && v.get(129));
        assert!(!v.get(1));
        assert_eq!(v.count_ones(), 3);
        v.flip(129);
        assert!(!v.get(129));
        assert_eq!(v.count_ones(), 2);
    }

    #[test]
    fn bitstring_roundtrip() {
        let v = BinaryVector::from_bitstring("10110").unwrap();
        assert_eq!(v.len(), 5);
        assert!(v.get(0) && !v.get(1) && v.get(2) && v.get(3) && !v.get(4));
        assert_eq!(v.to_bitstring(), "10110");
        assert!(BinaryVector::from_bitstring("10x").is_none());
    }

    #[test]
    fn hamming_identity_and_symmetry() {
        let a = BinaryVector::from_bitstring("1100110011").unwrap();
        let b = BinaryVector::from_bitstring("1010101010").unwrap();
        assert_eq!(a.hamming(&a), 0);
        assert_eq!(a.hamming(&b), b.hamming(&a));
        // Positions 1, 2, 5, 6 and 9 differ.
        assert_eq!(a.hamming(&b), 5);
    }

    #[test]
    fn hamming_checked_rejects_length_mismatch() {
        let a = BinaryVector::zeros(4);
        let b = BinaryVector::zeros(5);
        assert!(try_hamming(&a, &b).is_err());
    }

    #[test]
    fn ones_masks_tail() {
        let v = BinaryVector::ones(70);
        assert_eq!(v.count_ones(), 70);
        let z = BinaryVector::zeros(70);
        assert_eq!(v.hamming(&z), 70);
    }

    #[test]
    fn random_is_seed_deterministic() {
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a = BinaryVector::random(1000, &mut r1);
        let b = BinaryVector::random(1000, &mut r2);
        assert_eq!(a, b);
    }

    #[test]
    fn iter_ones_lists_indices() {
        let v = BinaryVector::from_bitstring("0100100001").unwrap();
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![1, 4, 9]);
        let mut w = BinaryVector::zeros(200);
        w.set(63, true);
        w.set(64, true);
        w.set(199, true);
        assert_eq!(w.iter_ones().collect::<Vec<_>>(), vec![63, 64, 199]);
    }

    #[test]
    fn union_with_ors_bits() {
        let mut a = BinaryVector::from_bitstring("1100").unwrap();
        let b = BinaryVector::from_bitstring("0110").unwrap();
        a.union_with(&b);
        assert_eq!(a.to_bitstring(), "1110");
    }
}
