//! Bit-packed binary model configurations.

use std::fmt;

use crate::error::{CoreError, Result};

/// Binary inclusion vector over P predictors: the discrete chain state.
///
/// Bits are packed into 64-bit words with any tail bits kept zero, so the
/// type can serve directly as a hash key for per-configuration caches. The
/// number of set bits is cached and maintained on every mutation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InclusionVector {
    len: usize,
    words: Vec<u64>,
    popcount: usize,
}

impl InclusionVector {
    /// The empty model: all indicators zero.
    pub fn empty(len: usize) -> Self {
        InclusionVector {
            len,
            words: vec![0u64; len.div_ceil(64)],
            popcount: 0,
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::empty(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_active_indices(len: usize, active: &[usize]) -> Self {
        let mut v = Self::empty(len);
        for &i in active {
            v.set(i, true);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn popcount(&self) -> usize {
        self.popcount
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "index {i} out of bounds for length {}", self.len);
        let mask = 1u64 << (i % 64);
        let word = &mut self.words[i / 64];
        let was = *word & mask != 0;
        if value && !was {
            *word |= mask;
            self.popcount += 1;
        } else if !value && was {
            *word &= !mask;
            self.popcount -= 1;
        }
    }

    /// A copy with bit `i` flipped.
    pub fn flipped(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.set(i, !out.get(i));
        out
    }

    /// A copy with bit `deactivate` cleared and `activate` set.
    pub fn swapped(&self, deactivate: usize, activate: usize) -> Self {
        let mut out = self.clone();
        out.set(deactivate, false);
        out.set(activate, true);
        out
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    /// Number of coordinates at which the two vectors differ.
    pub fn hamming(&self, other: &InclusionVector) -> Result<usize> {
        if self.len != other.len {
            return Err(CoreError::Dimension {
                op: "hamming",
                expected: self.len,
                got: other.len,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Packed words, tail bits zero.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn from_words(len: usize, words: Vec<u64>) -> Self {
        assert_eq!(words.len(), len.div_ceil(64));
        // Mask tail bits so equality and hashing stay canonical.
        let mut words = words;
        if len % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        let popcount = words.iter().map(|w| w.count_ones() as usize).sum();
        InclusionVector { len, words, popcount }
    }

    /// All 2^len configurations in integer order; only sensible for small len.
    pub fn enumerate_all(len: usize) -> Vec<InclusionVector> {
        assert!(len <= 20, "enumeration over 2^{len} states is not sensible");
        (0u64..(1u64 << len))
            .map(|code| InclusionVector::from_words(len, vec![code]))
            .collect()
    }
}

impl fmt::Display for InclusionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn popcount_tracks_mutations() {
        let mut v = InclusionVector::empty(130);
        assert_eq!(v.popcount(), 0);
        v.set(0, true);
        v.set(64, true);
        v.set(129, true);
        assert_eq!(v.popcount(), 3);
        v.set(64, true);
        assert_eq!(v.popcount(), 3);
        v.set(64, false);
        assert_eq!(v.popcount(), 2);
        assert_eq!(v.active_indices(), vec![0, 129]);
    }

    #[test]
    fn hamming_trivial_cases() {
        let a = InclusionVector::from_bits(&[true, false, true, true]);
        assert_eq!(a.hamming(&a).unwrap(), 0);
        let b = a.flipped(1);
        assert_eq!(a.hamming(&b).unwrap(), 1);
        let c = InclusionVector::empty(5);
        assert!(a.hamming(&c).is_err());
    }

    #[test]
    fn hamming_matches_naive_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let len = rng.random_range(1..200);
            let bits_a: Vec<bool> = (0..len).map(|_| rng.random::<bool>()).collect();
            let bits_b: Vec<bool> = (0..len).map(|_| rng.random::<bool>()).collect();
            let a = InclusionVector::from_bits(&bits_a);
            let b = InclusionVector::from_bits(&bits_b);
            let naive = bits_a.iter().zip(&bits_b).filter(|(x, y)| x != y).count();
            assert_eq!(a.hamming(&b).unwrap(), naive);
        }
    }

    #[test]
    fn words_roundtrip_masks_tail() {
        let v = InclusionVector::from_words(3, vec![0b1111_1011]);
        assert_eq!(v.popcount(), 2);
        assert!(v.get(0));
        assert!(!v.get(2));
    }
}
