//! Bit sequences.

use std::fmt;

/// Ordered sequence of binary symbols.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitStream {
    bits: Vec<bool>,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { bits: Vec::with_capacity(n) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    /// Expands bytes MSB-first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let mut out = Self::with_capacity(bytes.len() * 8);
        out.extend_bytes(bytes);
        out
    }

    /// Appends bytes MSB-first.
    pub fn extend_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            for shift in (0..8).rev() {
                self.bits.push((b >> shift) & 1 == 1);
            }
        }
    }

    /// Packs MSB-first; a trailing partial byte is zero-padded on the right.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
            })
            .collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    #[inline]
    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// Copies `len` bits starting at `start`. Panics when out of range.
    pub fn slice(&self, start: usize, len: usize) -> BitStream {
        Self { bits: self.bits[start..start + len].to_vec() }
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Number of differing positions over the common prefix of both streams.
    pub fn hamming_distance(&self, other: &BitStream) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }
}

impl From<Vec<bool>> for BitStream {
    fn from(bits: Vec<bool>) -> Self {
        Self { bits }
    }
}

impl FromIterator<bool> for BitStream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self { bits: iter.into_iter().collect() }
    }
}

impl Extend<bool> for BitStream {
    fn extend<I: IntoIterator<Item = bool>>(&mut self, iter: I) {
        self.bits.extend(iter);
    }
}

impl fmt::Debug for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitStream[{}](", self.len())?;
        for (i, b) in self.bits.iter().take(64).enumerate() {
            if i > 0 && i % 8 == 0 {
                f.write_str("_")?;
            }
            f.write_str(if *b { "1" } else { "0" })?;
        }
        if self.len() > 64 {
            f.write_str("...")?;
        }
        f.write_str(")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first_expansion() {
        let b = BitStream::from_bytes(&[0x0F, 0xA5]);
        let expect = [0, 0, 0, 0, 1, 1, 1, 1, 1, 0, 1, 0, 0, 1, 0, 1];
        assert_eq!(b.len(), 16);
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(b.get(i), Some(*e == 1));
        }
        assert_eq!(b.to_bytes(), vec![0x0F, 0xA5]);
    }

    #[test]
    fn counts() {
        let a = BitStream::from_bytes(&[0xFF, 0x01]);
        let b = BitStream::from_bytes(&[0x0F, 0x00]);
        assert_eq!(a.count_ones(), 9);
        assert_eq!(a.hamming_distance(&b), 5);
    }
}
