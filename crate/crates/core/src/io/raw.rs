//! Raw planar stack format.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "MOCO"
//!      4     4  rows m       (u32 LE)
//!      8     4  cols n       (u32 LE)
//!     12     4  frames T     (u32 LE)
//!     16     4  depth code   (u32 LE): 8 = u8, 16 = u16 LE, 64 = f64 LE
//!     20     .  T frames, each m*n samples row-major
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::frame::{BitDepth, Frame, Stack};

pub const MAGIC: &[u8; 4] = b"MOCO";
pub const HEADER_LEN: usize = 20;

fn depth_code(depth: BitDepth) -> u32 {
    match depth {
        BitDepth::U8 => 8,
        BitDepth::U16 => 16,
        BitDepth::Float => 64,
    }
}

fn depth_from_code(code: u32) -> Result<BitDepth> {
    match code {
        8 => Ok(BitDepth::U8),
        16 => Ok(BitDepth::U16),
        64 => Ok(BitDepth::Float),
        other => Err(Error::UnsupportedFormat(format!("raw depth code {other}"))),
    }
}

fn sample_len(depth: BitDepth) -> usize {
    match depth {
        BitDepth::U8 => 1,
        BitDepth::U16 => 2,
        BitDepth::Float => 8,
    }
}

pub fn encode(stack: &Stack) -> Vec<u8> {
    let (m, n) = stack.dims();
    let depth = stack.depth();
    let mut out = Vec::with_capacity(HEADER_LEN + stack.len() * m * n * sample_len(depth));
    out.extend_from_slice(MAGIC);
    for v in [m as u32, n as u32, stack.len() as u32, depth_code(depth)] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for f in stack.frames() {
        for &v in f.pixels() {
            let v = depth.quantize(v);
            match depth {
                BitDepth::U8 => out.push(v as u8),
                BitDepth::U16 => out.extend_from_slice(&(v as u16).to_le_bytes()),
                BitDepth::Float => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Stack> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated(format!(
            "raw header needs {HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::UnsupportedFormat("missing MOCO magic".into()));
    }
    let word =
        |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap()) as usize;
    let (m, n, count) = (word(0), word(1), word(2));
    let depth = depth_from_code(word(3) as u32)?;
    if m == 0 || n == 0 || count == 0 {
        return Err(Error::UnsupportedFormat(format!(
            "raw header declares an empty stack ({m}x{n}x{count})"
        )));
    }
    let frame_bytes = m * n * sample_len(depth);
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < frame_bytes * count {
        let complete = payload.len() / frame_bytes;
        return Err(Error::Truncated(format!(
            "frame {complete} of {count} is incomplete ({} payload bytes, {} expected)",
            payload.len(),
            frame_bytes * count
        )));
    }
    if payload.len() > frame_bytes * count {
        return Err(Error::UnsupportedFormat(format!(
            "{} trailing bytes after the last frame",
            payload.len() - frame_bytes * count
        )));
    }
    let frames = payload
        .chunks_exact(frame_bytes)
        .map(|chunk| {
            let px: Vec<f64> = match depth {
                BitDepth::U8 => chunk.iter().map(|&b| b as f64).collect(),
                BitDepth::U16 => chunk
                    .chunks_exact(2)
                    .map(|c| u16::from_le_bytes([c[0], c[1]]) as f64)
                    .collect(),
                BitDepth::Float => chunk
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            };
            Frame::new(m, n, px, depth)
        })
        .collect::<Result<Vec<_>>>()?;
    Stack::new(frames)
}

pub fn write<W: Write>(stack: &Stack, mut w: W) -> std::io::Result<()> {
    w.write_all(&encode(stack))
}

pub fn read<R: Read>(mut r: R) -> Result<Stack> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)
        .map_err(|e| Error::io("<raw stream>", e))?;
    decode(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_sixteen_bit() {
        let mut bytes = MAGIC.to_vec();
        for v in [2u32, 2, 1, 16] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for v in [1u16, 2, 300, 65535] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(bytes.len(), HEADER_LEN + 8);
        let s = decode(&bytes).unwrap();
        assert_eq!((s.len(), s.dims(), s.depth()), (1, (2, 2), BitDepth::U16));
        assert_eq!(s.frames()[0].pixels(), &[1.0, 2.0, 300.0, 65535.0]);
        assert_eq!(encode(&s), bytes);
    }

    #[test]
    fn error_classes() {
        let good = encode(&Stack::new(vec![Frame::zeros(2, 3, BitDepth::U8).unwrap(); 2]).unwrap());
        assert!(matches!(decode(&good[..10]), Err(Error::Truncated(_))));
        assert!(matches!(
            decode(&good[..good.len() - 1]),
            Err(Error::Truncated(_))
        ));
        let mut extra = good.clone();
        extra.push(0);
        assert!(matches!(decode(&extra), Err(Error::UnsupportedFormat(_))));
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            decode(&bad_magic),
            Err(Error::UnsupportedFormat(_))
        ));
        let mut bad_depth = good;
        bad_depth[16] = 12;
        assert!(matches!(
            decode(&bad_depth),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn float_values_survive() {
        let f = Frame::from_rows(&[[0.1, -2.5], [1e300, 3.0]]).unwrap();
        let s = Stack::new(vec![f]).unwrap();
        assert_eq!(decode(&encode(&s)).unwrap(), s);
    }
}
