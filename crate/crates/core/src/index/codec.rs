//! Portable fixed-width bit-packing for postings blocks.
//!
//! A postings block is `[delta_width: u8][impact_width: u8]` followed by the
//! docid gaps and then the impacts, each packed LSB-first at its width, in one
//! bitstream padded to a byte boundary. Docid-only blocks (impact segments) carry
//! a single width byte.

use crate::error::{Error, Result};

/// Postings per block; the last block of a list may be shorter.
pub const BLOCK_SIZE: usize = 128;

/// Largest impact storable in a posting.
pub const MAX_POSTING_IMPACT: u32 = u16::MAX as u32;

/// Bits needed to represent `value`.
pub fn bit_width(value: u32) -> u8 {
    (u32::BITS - value.leading_zeros()) as u8
}

fn packed_bytes(bits: usize) -> usize {
    bits.div_ceil(8)
}

struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    fn with_capacity(bytes: usize) -> Self {
        Self { bytes: Vec::with_capacity(bytes), acc: 0, filled: 0 }
    }

    fn push(&mut self, value: u32, width: u8) {
        if width == 0 {
            return;
        }
        self.acc |= u64::from(value) << self.filled;
        self.filled += u32::from(width);
        while self.filled >= 8 {
            self.bytes.push(self.acc as u8);
            self.acc >>= 8;
            self.filled -= 8;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.bytes.push(self.acc as u8);
        }
        self.bytes
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    bit: usize,
}

impl BitReader<'_> {
    fn pull(&mut self, width: u8) -> u32 {
        let mut value = 0u64;
        let mut got = 0u32;
        while got < u32::from(width) {
            let byte = self.bytes[self.bit / 8];
            let offset = (self.bit % 8) as u32;
            let take = (8 - offset).min(u32::from(width) - got);
            let bits = (u64::from(byte) >> offset) & ((1u64 << take) - 1);
            value |= bits << got;
            got += take;
            self.bit += take as usize;
        }
        value as u32
    }
}

fn check_block_shape(deltas: &[u32], impacts: &[u32]) -> Result<()> {
    if deltas.len() != impacts.len() {
        return Err(Error::Codec(format!(
            "{} deltas but {} impacts",
            deltas.len(),
            impacts.len()
        )));
    }
    if deltas.len() > BLOCK_SIZE {
        return Err(Error::Codec(format!("block of {} exceeds {BLOCK_SIZE}", deltas.len())));
    }
    if deltas.contains(&0) {
        return Err(Error::Codec("docid gap of 0: docids must be strictly ascending".into()));
    }
    if let Some(bad) = impacts.iter().find(|&&i| i == 0 || i > MAX_POSTING_IMPACT) {
        return Err(Error::Codec(format!("impact {bad} outside [1, {MAX_POSTING_IMPACT}]")));
    }
    Ok(())
}

fn check_width(values: &[u32], width: u8, what: &str) -> Result<()> {
    match values.iter().find(|&&v| bit_width(v) > width) {
        Some(v) => Err(Error::Codec(format!("{what} {v} does not fit in {width} bits"))),
        None => Ok(()),
    }
}

/// Encodes with caller-declared widths.
pub fn encode_block_with_widths(
    deltas: &[u32],
    impacts: &[u32],
    delta_width: u8,
    impact_width: u8,
) -> Result<Vec<u8>> {
    check_block_shape(deltas, impacts)?;
    if delta_width > 32 || impact_width > 16 {
        return Err(Error::Codec(format!(
            "declared widths ({delta_width}, {impact_width}) exceed (32, 16)"
        )));
    }
    check_width(deltas, delta_width, "delta")?;
    check_width(impacts, impact_width, "impact")?;

    let payload_bits = deltas.len() * (usize::from(delta_width) + usize::from(impact_width));
    let mut writer = BitWriter::with_capacity(packed_bytes(payload_bits));
    for &d in deltas {
        writer.push(d, delta_width);
    }
    for &i in impacts {
        writer.push(i, impact_width);
    }
    let mut out = vec![delta_width, impact_width];
    out.extend(writer.finish());
    Ok(out)
}

/// Encodes a block of docid gaps and impacts using the minimal widths.
pub fn encode_block(deltas: &[u32], impacts: &[u32]) -> Result<Vec<u8>> {
    let dw = deltas.iter().copied().map(bit_width).max().unwrap_or(0);
    let iw = impacts.iter().copied().map(bit_width).max().unwrap_or(0);
    encode_block_with_widths(deltas, impacts, dw, iw)
}

/// Byte length of the encoded block at the start of `bytes` holding `count` postings.
pub fn block_len(bytes: &[u8], count: usize) -> Result<usize> {
    let [dw, iw, ..] = bytes else {
        return Err(Error::Codec("block header truncated".into()));
    };
    Ok(2 + packed_bytes(count * (usize::from(*dw) + usize::from(*iw))))
}

/// Inverse of [`encode_block`].
pub fn decode_block(bytes: &[u8], count: usize) -> Result<(Vec<u32>, Vec<u32>)> {
    if count > BLOCK_SIZE {
        return Err(Error::Codec(format!("block of {count} exceeds {BLOCK_SIZE}")));
    }
    let len = block_len(bytes, count)?;
    let (dw, iw) = (bytes[0], bytes[1]);
    if dw > 32 || iw > 16 {
        return Err(Error::Codec(format!("invalid widths ({dw}, {iw})")));
    }
    if bytes.len() < len {
        return Err(Error::Codec(format!("block needs {len} bytes, have {}", bytes.len())));
    }
    let mut reader = BitReader { bytes: &bytes[2..len], bit: 0 };
    let deltas: Vec<u32> = (0..count).map(|_| reader.pull(dw)).collect();
    let impacts: Vec<u32> = (0..count).map(|_| reader.pull(iw)).collect();
    check_block_shape(&deltas, &impacts)?;
    Ok((deltas, impacts))
}

/// Encodes a block of docid gaps alone.
pub fn encode_docid_block(deltas: &[u32]) -> Result<Vec<u8>> {
    if deltas.len() > BLOCK_SIZE {
        return Err(Error::Codec(format!("block of {} exceeds {BLOCK_SIZE}", deltas.len())));
    }
    if deltas.contains(&0) {
        return Err(Error::Codec("docid gap of 0: docids must be strictly ascending".into()));
    }
    let dw = deltas.iter().copied().map(bit_width).max().unwrap_or(0);
    let mut writer = BitWriter::with_capacity(packed_bytes(deltas.len() * usize::from(dw)));
    for &d in deltas {
        writer.push(d, dw);
    }
    let mut out = vec![dw];
    out.extend(writer.finish());
    Ok(out)
}

pub fn docid_block_len(bytes: &[u8], count: usize) -> Result<usize> {
    let Some(&dw) = bytes.first() else {
        return Err(Error::Codec("block header truncated".into()));
    };
    Ok(1 + packed_bytes(count * usize::from(dw)))
}

pub fn decode_docid_block(bytes: &[u8], count: usize) -> Result<Vec<u32>> {
    if count > BLOCK_SIZE {
        return Err(Error::Codec(format!("block of {count} exceeds {BLOCK_SIZE}")));
    }
    let len = docid_block_len(bytes, count)?;
    let dw = bytes[0];
    if dw > 32 {
        return Err(Error::Codec(format!("invalid width {dw}")));
    }
    if bytes.len() < len {
        return Err(Error::Codec(format!("block needs {len} bytes, have {}", bytes.len())));
    }
    let mut reader = BitReader { bytes: &bytes[1..len], bit: 0 };
    let deltas: Vec<u32> = (0..count).map(|_| reader.pull(dw)).collect();
    if deltas.contains(&0) {
        return Err(Error::Codec("decoded docid gap of 0".into()));
    }
    Ok(deltas)
}

/// Gaps for an ascending docid run that follows `previous` (`None` at list start).
///
/// The first docid of a list is stored as `docid + 1` so every gap is >= 1.
pub fn docid_gaps(previous: Option<u32>, docids: &[u32]) -> Vec<u32> {
    let mut prev = previous.map_or(0, |p| u64::from(p) + 1);
    docids
        .iter()
        .map(|&d| {
            let next = u64::from(d) + 1;
            let gap = next.wrapping_sub(prev) as u32;
            prev = next;
            gap
        })
        .collect()
}

/// Inverse of [`docid_gaps`].
pub fn docids_from_gaps(previous: Option<u32>, gaps: &[u32]) -> Result<Vec<u32>> {
    let mut prev = previous.map_or(0, |p| u64::from(p) + 1);
    gaps.iter()
        .map(|&g| {
            prev += u64::from(g);
            u32::try_from(prev - 1).map_err(|_| Error::Codec("docid overflows u32".into()))
        })
        .collect()
}
