//! Frames, stacks and shifts.
//!
//! Pixels are stored row-major as `f64` regardless of the source bit depth.
//! Indices are 0-based: pixel `(i, j)` lives at `i * cols + j`.

use crate::error::{Error, Result};

/// Pixel format the intensities were loaded from (and are saved back to).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BitDepth {
    U8,
    U16,
    Float,
}

impl BitDepth {
    /// Largest representable intensity for integer formats.
    pub fn max_value(self) -> Option<f64> {
        match self {
            BitDepth::U8 => Some(u8::MAX as f64),
            BitDepth::U16 => Some(u16::MAX as f64),
            BitDepth::Float => None,
        }
    }

    pub fn is_integer(self) -> bool {
        self != BitDepth::Float
    }

    /// Round half-to-even and clip into the format's range. Float passes through.
    pub fn quantize(self, v: f64) -> f64 {
        match self.max_value() {
            Some(max) => v.round_ties_even().clamp(0.0, max),
            None => v,
        }
    }
}

/// One grayscale image.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
    depth: BitDepth,
}

impl Frame {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>, depth: BitDepth) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidFrame(format!(
                "dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if pixels.len() != rows * cols {
            return Err(Error::InvalidFrame(format!(
                "expected {} pixels for {rows}x{cols}, got {}",
                rows * cols,
                pixels.len()
            )));
        }
        if let Some(idx) = pixels.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFrame(format!(
                "non-finite intensity at pixel ({}, {})",
                idx / cols,
                idx % cols
            )));
        }
        if let Some(max) = depth.max_value() {
            if let Some(idx) = pixels.iter().position(|&v| v < 0.0 || v > max) {
                return Err(Error::InvalidFrame(format!(
                    "intensity {} at pixel ({}, {}) outside [0, {max}] for {depth:?}",
                    pixels[idx],
                    idx / cols,
                    idx % cols
                )));
            }
        }
        Ok(Frame {
            rows,
            cols,
            pixels,
            depth,
        })
    }

    /// Convenience constructor for float frames from nested rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != n_cols) {
            return Err(Error::InvalidFrame("ragged rows".into()));
        }
        let pixels = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Frame::new(n_rows, n_cols, pixels, BitDepth::Float)
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        depth: BitDepth,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                pixels.push(f(i, j));
            }
        }
        Frame::new(rows, cols, pixels, depth)
    }

    pub fn zeros(rows: usize, cols: usize, depth: BitDepth) -> Result<Self> {
        Frame::new(rows, cols, vec![0.0; rows * cols], depth)
    }

    /// Builds a frame from data the caller has already validated.
    pub(crate) fn from_parts(rows: usize, cols: usize, pixels: Vec<f64>, depth: BitDepth) -> Self {
        debug_assert_eq!(pixels.len(), rows * cols);
        Frame {
            rows,
            cols,
            pixels,
            depth,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.pixels[i * self.cols..(i + 1) * self.cols]
    }

    /// Same pixels, different recorded depth. Values are quantized for integer targets.
    pub fn with_depth(&self, depth: BitDepth) -> Frame {
        let pixels = self.pixels.iter().map(|&v| depth.quantize(v)).collect();
        Frame::from_parts(self.rows, self.cols, pixels, depth)
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    /// Population variance of the intensities.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.pixels
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / self.pixels.len() as f64
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.pixels.iter().map(|v| v * v).sum()
    }
}

/// An ordered, non-empty sequence of equally sized frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Stack {
    frames: Vec<Frame>,
}

impl Stack {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidStack("a stack needs at least one frame".into()))?;
        let (dims, depth) = (first.dims(), first.depth());
        for (k, f) in frames.iter().enumerate().skip(1) {
            if f.dims() != dims {
                return Err(Error::InvalidStack(format!(
                    "frame {k} is {:?}, frame 0 is {dims:?}",
                    f.dims()
                )));
            }
            if f.depth() != depth {
                return Err(Error::InvalidStack(format!(
                    "frame {k} has depth {:?}, frame 0 has {depth:?}",
                    f.depth()
                )));
            }
        }
        Ok(Stack { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn depth(&self) -> BitDepth {
        self.frames[0].depth()
    }

    /// Pixel-wise mean over all frames, as a float frame.
    pub fn mean_frame(&self) -> Frame {
        let (rows, cols) = self.dims();
        let mut acc = vec![0.0; rows * cols];
        for f in &self.frames {
            for (a, v) in acc.iter_mut().zip(f.pixels()) {
                *a += v;
            }
        }
        let scale = 1.0 / self.frames.len() as f64;
        acc.iter_mut().for_each(|a| *a *= scale);
        Frame::from_parts(rows, cols, acc, BitDepth::Float)
    }
}

/// An integer displacement `(s, t)` and the objective value it achieves.
///
/// `s` moves along rows, `t` along columns. A frame `a` aligned to template
/// `b` with shift `(s, t)` satisfies `a[i + s][j + t] ~ b[i][j]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Shift {
    pub s: isize,
    pub t: isize,
    pub score: f64,
}

impl Shift {
    pub fn new(s: isize, t: isize, score: f64) -> Self {
        Shift { s, t, score }
    }

    pub fn zero() -> Self {
        Shift::new(0, 0, 0.0)
    }

    pub fn offset(&self) -> (isize, isize) {
        (self.s, self.t)
    }

    /// The displacement that undoes this one (score is not carried over).
    pub fn inverse(&self) -> Shift {
        Shift::new(-self.s, -self.t, 0.0)
    }

    pub fn max_abs(&self) -> usize {
        self.s.unsigned_abs().max(self.t.unsigned_abs())
    }

    pub fn chebyshev(&self, other: &Shift) -> usize {
        (self.s - other.s)
            .unsigned_abs()
            .max((self.t - other.t).unsigned_abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length_and_nan() {
        assert!(Frame::new(2, 2, vec![0.0; 3], BitDepth::Float).is_err());
        assert!(Frame::new(1, 2, vec![0.0, f64::NAN], BitDepth::Float).is_err());
        assert!(Frame::new(1, 1, vec![f64::INFINITY], BitDepth::Float).is_err());
    }

    #[test]
    fn integer_depth_range_is_enforced() {
        assert!(Frame::new(1, 1, vec![256.0], BitDepth::U8).is_err());
        assert!(Frame::new(1, 1, vec![-1.0], BitDepth::U16).is_err());
        assert!(Frame::new(1, 1, vec![65535.0], BitDepth::U16).is_ok());
    }

    #[test]
    fn stack_requires_matching_frames() {
        let a = Frame::zeros(2, 2, BitDepth::U8).unwrap();
        let b = Frame::zeros(2, 3, BitDepth::U8).unwrap();
        let c = Frame::zeros(2, 2, BitDepth::U16).unwrap();
        assert!(Stack::new(vec![]).is_err());
        assert!(Stack::new(vec![a.clone(), b]).is_err());
        assert!(Stack::new(vec![a.clone(), c]).is_err());
        assert_eq!(Stack::new(vec![a.clone(), a]).unwrap().len(), 2);
    }

    #[test]
    fn quantize_rounds_half_to_even() {
        assert_eq!(BitDepth::U8.quantize(3.5), 4.0);
        assert_eq!(BitDepth::U8.quantize(2.5), 2.0);
        assert_eq!(BitDepth::U8.quantize(300.0), 255.0);
        assert_eq!(BitDepth::U16.quantize(-3.0), 0.0);
        assert_eq!(BitDepth::Float.quantize(2.5), 2.5);
    }

    #[test]
    fn mean_frame_of_two() {
        let a = Frame::from_rows(&[[0.0]]).unwrap();
        let b = Frame::from_rows(&[[2.0]]).unwrap();
        let m = Stack::new(vec![a, b]).unwrap().mean_frame();
        assert_eq!(m.pixels(), &[1.0]);
    }
}
