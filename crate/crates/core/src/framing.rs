//! Transmit frames: a 32-bit prefix (four repeats of an 8-bit pattern)
//! followed by the payload, MSB-first.

use crate::bits::BitStream;

pub const PREFIX_BITS: usize = 32;
/// Payload bits compared per frame (190 bytes).
pub const PAYLOAD_BITS: usize = 1520;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FramingError {
    #[error("payload is empty")]
    EmptyPayload,
    #[error("prefix not found in {searched} bits")]
    SyncFailure { searched: usize },
    #[error("truncated frame: need {needed} bits after offset, have {available}")]
    Truncated { needed: usize, available: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pattern: u8,
    payload: BitStream,
}

impl Frame {
    pub fn pattern(&self) -> u8 {
        self.pattern
    }

    /// The pattern repeated four times.
    pub fn prefix(&self) -> u32 {
        prefix_word(self.pattern)
    }

    pub fn payload(&self) -> &BitStream {
        &self.payload
    }

    pub fn len_bits(&self) -> usize {
        PREFIX_BITS + self.payload.len()
    }

    /// Transmit-order bits: prefix then payload.
    pub fn bits(&self) -> BitStream {
        let mut out = BitStream::with_capacity(self.len_bits());
        out.extend_bytes(&[self.pattern; 4]);
        out.extend(self.payload.iter());
        out
    }
}

#[inline]
pub fn prefix_word(pattern: u8) -> u32 {
    u32::from_be_bytes([pattern; 4])
}

pub fn build_frame(payload: &[u8], pattern: u8) -> Result<Frame, FramingError> {
    if payload.is_empty() {
        return Err(FramingError::EmptyPayload);
    }
    Ok(Frame { pattern, payload: BitStream::from_bytes(payload) })
}

/// Smallest index at which the full 32-bit prefix occurs.
pub fn locate_prefix(bits: &BitStream, pattern: u8) -> Result<usize, FramingError> {
    let target = prefix_word(pattern);
    let mut window = 0u32;
    for (i, b) in bits.iter().enumerate() {
        window = (window << 1) | b as u32;
        if i + 1 >= PREFIX_BITS && window == target {
            return Ok(i + 1 - PREFIX_BITS);
        }
    }
    Err(FramingError::SyncFailure { searched: bits.len() })
}

/// The `n` bits that follow the prefix starting at `offset`.
pub fn extract_payload(bits: &BitStream, offset: usize, n: usize) -> Result<BitStream, FramingError> {
    let start = offset + PREFIX_BITS;
    let available = bits.len().saturating_sub(start);
    if available < n {
        return Err(FramingError::Truncated { needed: n, available });
    }
    Ok(bits.slice(start, n))
}
