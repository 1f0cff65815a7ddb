#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stackalign::{BitDepth, Frame, Stack};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer-valued frame with entries in `0..=hi`.
pub fn int_frame(rng: &mut impl Rng, m: usize, n: usize, hi: u32) -> Frame {
    let px = (0..m * n)
        .map(|_| f64::from(rng.random_range(0..=hi)))
        .collect();
    Frame::new(m, n, px, BitDepth::Float).unwrap()
}

pub fn real_frame(rng: &mut impl Rng, m: usize, n: usize) -> Frame {
    let px = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Frame::new(m, n, px, BitDepth::Float).unwrap()
}

pub fn int_stack(rng: &mut impl Rng, m: usize, n: usize, t: usize, depth: BitDepth) -> Stack {
    let hi = depth.max_value().expect("integer depth") as u32;
    let frames = (0..t)
        .map(|_| {
            let px = (0..m * n)
                .map(|_| f64::from(rng.random_range(0..=hi)))
                .collect();
            Frame::new(m, n, px, depth).unwrap()
        })
        .collect();
    Stack::new(frames).unwrap()
}

/// Direct sums of squares over the overlap, as the frame side and the template side.
pub fn direct_sq(a: &Frame, b: &Frame, s: isize, t: isize) -> (f64, f64) {
    let region = stackalign::overlap(a.rows(), a.cols(), s, t).unwrap();
    let mut sa = 0.0;
    let mut sb = 0.0;
    for (i, j) in region.pairs() {
        let x = a.get((i as isize + s) as usize, (j as isize + t) as usize);
        let y = b.get(i, j);
        sa += x * x;
        sb += y * y;
    }
    (sa, sb)
}

pub fn rel_close(x: f64, y: f64, rel: f64) -> bool {
    (x - y).abs() <= rel * (1.0 + x.abs().max(y.abs()))
}
