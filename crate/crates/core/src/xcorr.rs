//! Cross term `h(s, t) = sum_{(i,j) in D(s,t)} a[i+s][j+t] * b[i][j]` for every
//! shift in range, from one zero-padded 2D FFT product.
//!
//! Both `a` and the 180-degree rotation of `b` sit in the top-left corner of a
//! `P x Q` zero canvas. Their circular convolution `c` then holds
//! `h(s, t) = c[(m - 1 + s), (n - 1 + t)]`. The linear convolution has support
//! `[0, 2m - 2]` along rows, so any `P >= m + w` keeps every lag
//! `|s| <= w - 1` free of wrap-around (likewise for columns).

use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::overlap::{check_bound, ShiftTable};

/// `h(s, t)` over `max(|s|, |t|) < w`, plus the transform size used.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrGrid {
    pub table: ShiftTable,
    pub fft_dims: (usize, usize),
}

/// `out[i][j] = b[m-1-i][n-1-j]`.
pub fn rotate_180(b: &Frame) -> Frame {
    let mut pixels = b.pixels().to_vec();
    pixels.reverse();
    Frame::from_parts(b.rows(), b.cols(), pixels, b.depth())
}

/// Smallest `2^a 3^b 5^c 7^d` that is `>= min`.
pub fn fft_friendly_len(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut r = n;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}

/// Default padded transform size for `rows x cols` frames and bound `w`.
pub fn default_fft_dims(rows: usize, cols: usize, w: usize) -> (usize, usize) {
    (fft_friendly_len(rows + w), fft_friendly_len(cols + w))
}

/// Forward/inverse plans for one padded size.
struct Plans {
    p: usize,
    q: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(p: usize, q: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Plans {
            p,
            q,
            r2c: real.plan_fft_forward(q),
            c2r: real.plan_fft_inverse(q),
            col_fwd: cplx.plan_fft_forward(p),
            col_inv: cplx.plan_fft_inverse(p),
        }
    }

    /// Number of retained frequency columns from the real row transform.
    fn k(&self) -> usize {
        self.q / 2 + 1
    }

    /// 2D spectrum of `x` zero-padded to `p x q`, stored column-major
    /// (`out[kq * p + kp]`).
    fn forward(&self, x: &Frame) -> Vec<Complex<f64>> {
        let (m, n) = x.dims();
        let (p, q, k) = (self.p, self.q, self.k());
        let mut spec = vec![Complex::new(0.0, 0.0); k * p];
        let mut row_in = vec![0.0; q];
        let mut row_out = self.r2c.make_output_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for i in 0..m {
            row_in[..n].copy_from_slice(x.row(i));
            row_in[n..].fill(0.0);
            self.r2c
                .process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                .expect("buffer sizes come from the plan");
            for (kq, v) in row_out.iter().enumerate() {
                spec[kq * p + i] = *v;
            }
        }
        let mut col_scratch = vec![Complex::new(0.0, 0.0); self.col_fwd.get_inplace_scratch_len()];
        self.col_fwd
            .process_with_scratch(&mut spec, &mut col_scratch);
        spec
    }

    /// Inverse-transforms `spec` in place and extracts the requested window of
    /// the real result: rows `r0..r0 + len_r`, columns `c0..c0 + len_c`.
    fn inverse_window(
        &self,
        spec: &mut [Complex<f64>],
        (r0, len_r): (usize, usize),
        (c0, len_c): (usize, usize),
    ) -> Vec<f64> {
        let (p, q, k) = (self.p, self.q, self.k());
        let mut col_scratch = vec![Complex::new(0.0, 0.0); self.col_inv.get_inplace_scratch_len()];
        self.col_inv.process_with_scratch(spec, &mut col_scratch);

        let scale = 1.0 / (p * q) as f64;
        let mut row_in = self.c2r.make_input_vec();
        let mut row_out = self.c2r.make_output_vec();
        let mut scratch = self.c2r.make_scratch_vec();
        let mut out = Vec::with_capacity(len_r * len_c);
        for r in r0..r0 + len_r {
            for (kq, v) in row_in.iter_mut().enumerate() {
                *v = spec[kq * p + r];
            }
            // the DC (and Nyquist) bins of a real signal are real; drop round-off
            row_in[0].im = 0.0;
            if q % 2 == 0 {
                row_in[k - 1].im = 0.0;
            }
            self.c2r
                .process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                .expect("buffer sizes come from the plan");
            out.extend(row_out[c0..c0 + len_c].iter().map(|v| v * scale));
        }
        out
    }
}

/// The template's padded spectrum, reusable across every frame of a stack.
pub struct TemplateSpectrum {
    dims: (usize, usize),
    w: usize,
    plans: Plans,
    rotated: Vec<Complex<f64>>,
}

impl TemplateSpectrum {
    pub fn new(b: &Frame, w: usize) -> Result<Self> {
        let (m, n) = b.dims();
        check_bound(w, m, n)?;
        Self::with_fft_dims(b, w, default_fft_dims(m, n, w))
    }

    /// Uses an explicit transform size; anything at least `(m + w, n + w)` is accepted.
    pub fn with_fft_dims(b: &Frame, w: usize, fft_dims: (usize, usize)) -> Result<Self> {
        let (m, n) = b.dims();
        check_bound(w, m, n)?;
        if fft_dims.0 < m + w || fft_dims.1 < n + w {
            return Err(Error::Config(format!(
                "fft dims {fft_dims:?} alias lags below ({}, {})",
                m + w,
                n + w
            )));
        }
        let plans = Plans::new(fft_dims.0, fft_dims.1);
        let rotated = plans.forward(&rotate_180(b));
        Ok(TemplateSpectrum {
            dims: (m, n),
            w,
            plans,
            rotated,
        })
    }

    pub fn fft_dims(&self) -> (usize, usize) {
        (self.plans.p, self.plans.q)
    }

    pub fn bound(&self) -> usize {
        self.w
    }

    /// `h(s, t)` of frame `a` against the template.
    pub fn correlate(&self, a: &Frame) -> Result<CorrGrid> {
        if a.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                left: a.dims(),
                right: self.dims,
            });
        }
        let (m, n) = self.dims;
        let w = self.w;
        let mut spec = self.plans.forward(a);
        for (x, y) in spec.iter_mut().zip(&self.rotated) {
            *x *= *y;
        }
        let side = 2 * w - 1;
        let values = self
            .plans
            .inverse_window(&mut spec, (m - w, side), (n - w, side));
        let mut table = ShiftTable::zeros(w);
        let r = w as isize - 1;
        let mut it = values.into_iter();
        for s in -r..=r {
            for t in -r..=r {
                table.set(s, t, it.next().expect("window has side^2 entries"));
            }
        }
        Ok(CorrGrid {
            table,
            fft_dims: self.fft_dims(),
        })
    }
}

pub fn compute_corr_grid(a: &Frame, b: &Frame, w: usize) -> Result<CorrGrid> {
    check_dims(a, b)?;
    TemplateSpectrum::new(b, w)?.correlate(a)
}

/// As [`compute_corr_grid`] with an explicit padded size.
pub fn compute_corr_grid_with_dims(
    a: &Frame,
    b: &Frame,
    w: usize,
    fft_dims: (usize, usize),
) -> Result<CorrGrid> {
    check_dims(a, b)?;
    TemplateSpectrum::with_fft_dims(b, w, fft_dims)?.correlate(a)
}

fn check_dims(a: &Frame, b: &Frame) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    Ok(())
}

/// `h(s, t)` by direct summation over the overlap.
pub fn direct_corr(a: &Frame, b: &Frame, s: isize, t: isize) -> Result<f64> {
    check_dims(a, b)?;
    let region = crate::overlap::overlap(a.rows(), a.cols(), s, t)?;
    let mut acc = 0.0;
    for i in region.rows.clone() {
        let ra = a.row((i as isize + s) as usize);
        let rb = b.row(i);
        for j in region.cols.clone() {
            acc += ra[(j as isize + t) as usize] * rb[j];
        }
    }
    Ok(acc)
}
