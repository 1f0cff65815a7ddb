//! Per-frame alignment and the whole-stack driver.
//!
//! A frame is searched exhaustively at the coarsest pyramid level, then the
//! shift is doubled and re-optimized over its nine neighbours at each finer
//! level until full resolution.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::config::{level_bound, AlignConfig, TemplateSource, TieBreak};
use crate::error::{Error, Result};
use crate::frame::{BitDepth, Frame, Shift, Stack};
use crate::overlap::{
    assemble_scores, check_bound, select_best, CornerSums, PrefixTables, ScoreGrid,
};
use crate::xcorr::TemplateSpectrum;

/// Progress callback: `(frames_done, frames_total)`.
pub type ProgressSink<'a> = &'a (dyn Fn(usize, usize) + Sync);

/// 2x2 block mean; a trailing odd row or column is dropped.
pub fn downsample(f: &Frame) -> Result<Frame> {
    let (m, n) = f.dims();
    if m < 2 || n < 2 {
        return Err(Error::InvalidFrame(format!(
            "{m}x{n} frame is too small to downsample"
        )));
    }
    let (hm, hn) = (m / 2, n / 2);
    let mut out = Vec::with_capacity(hm * hn);
    for i in 0..hm {
        let r0 = f.row(2 * i);
        let r1 = f.row(2 * i + 1);
        for j in 0..hn {
            out.push(0.25 * (r0[2 * j] + r0[2 * j + 1] + r1[2 * j] + r1[2 * j + 1]));
        }
    }
    Ok(Frame::from_parts(hm, hn, out, BitDepth::Float))
}

/// `levels + 1` frames, full resolution first.
pub fn build_pyramid(f: &Frame, levels: usize) -> Result<Vec<Frame>> {
    let mut out = vec![f.clone()];
    for _ in 0..levels {
        let next = downsample(out.last().expect("pyramid starts non-empty"))?;
        out.push(next);
    }
    Ok(out)
}

/// Translates `f` into the template's coordinate system:
/// `out[i][j] = f[i + s][j + t]`, zero where that pixel does not exist.
pub fn apply_shift(f: &Frame, shift: &Shift) -> Frame {
    let (m, n) = f.dims();
    let mut out = vec![0.0; m * n];
    let (s, t) = shift.offset();
    if shift.max_abs() < m.min(n) {
        let region = crate::overlap::overlap(m, n, s, t).expect("shift checked against dims");
        let c0 = region.cols.start;
        let c1 = region.cols.end;
        let src_c0 = (c0 as isize + t) as usize;
        for i in region.rows.clone() {
            let src = f.row((i as isize + s) as usize);
            out[i * n + c0..i * n + c1].copy_from_slice(&src[src_c0..src_c0 + (c1 - c0)]);
        }
    }
    Frame::from_parts(m, n, out, f.depth())
}

/// Template state for one pyramid level: the image, its shift bound, and
/// the parts of the objective that depend only on the template.
///
/// Frames and template are both offset by the template mean before scoring;
/// the difference `a - b` is unchanged, but the three-term expansion loses
/// far less precision to cancellation.
struct LevelTemplate {
    frame: Frame,
    w: usize,
    offset: f64,
    spectrum: TemplateSpectrum,
    sq_b: crate::overlap::ShiftTable,
}

impl LevelTemplate {
    fn new(frame: Frame, w: usize) -> Result<Self> {
        check_bound(w, frame.rows(), frame.cols())?;
        let offset = frame.mean();
        let centered = shifted_values(&frame, offset);
        let spectrum = TemplateSpectrum::new(&centered, w)?;
        let sq_b = CornerSums::new(&centered, w).table_as_template();
        Ok(LevelTemplate {
            frame,
            w,
            offset,
            spectrum,
            sq_b,
        })
    }

    fn score_grid(&self, a: &Frame) -> Result<ScoreGrid> {
        let centered = shifted_values(a, self.offset);
        let h = self.spectrum.correlate(&centered)?;
        let tables = PrefixTables {
            sq_a: CornerSums::new(&centered, self.w).table_as_frame(),
            sq_b: self.sq_b.clone(),
        };
        assemble_scores(&tables, &h, a.dims())
    }
}

fn shifted_values(f: &Frame, offset: f64) -> Frame {
    let px = f.pixels().iter().map(|v| v - offset).collect();
    Frame::from_parts(f.rows(), f.cols(), px, BitDepth::Float)
}

/// The template at every pyramid level, prepared once per stack and shared
/// read-only by all workers.
pub struct TemplatePyramid {
    levels: Vec<LevelTemplate>,
}

impl TemplatePyramid {
    pub fn new(template: &Frame, max_shift: usize, levels: usize) -> Result<Self> {
        let frames = build_pyramid(template, levels)?;
        let levels = frames
            .into_iter()
            .enumerate()
            .map(|(l, f)| LevelTemplate::new(f, level_bound(max_shift, l)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TemplatePyramid { levels })
    }

    pub fn for_config(template: &Frame, config: &AlignConfig) -> Result<Self> {
        config.validate_for(template.dims())?;
        Self::new(
            template,
            config.max_shift,
            config.resolved_levels(template.dims()),
        )
    }

    /// Number of downsamplings.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn frame(&self, level: usize) -> &Frame {
        &self.levels[level].frame
    }

    pub fn bound(&self, level: usize) -> usize {
        self.levels[level].w
    }

    pub fn dims(&self) -> (usize, usize) {
        self.levels[0].frame.dims()
    }
}

/// Exhaustive search over `max(|s|, |t|) < w`: prefix tables for the squared
/// terms, FFT for the cross term, then argmin under the tie-break policy.
pub fn coarse_align(a: &Frame, b: &Frame, w: usize) -> Result<Shift> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    let grid = LevelTemplate::new(b.clone(), w)?.score_grid(a)?;
    Ok(grid.argmin(TieBreak::LeastMotion))
}

/// Full score grid for `a` against `b`, as used by the coarse search.
pub fn score_grid(a: &Frame, b: &Frame, w: usize) -> Result<ScoreGrid> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    LevelTemplate::new(b.clone(), w)?.score_grid(a)
}

/// Evaluates `f` at `(2s + u, 2t + v)` for `u, v in {-1, 0, 1}` on the finer
/// frames and returns the best candidate. Candidates with
/// `max(|s|, |t|) >= w` are skipped.
pub fn refine_upsample(shift: &Shift, a_fine: &Frame, b_fine: &Frame, w: usize) -> Result<Shift> {
    refine_with(shift, a_fine, b_fine, w, TieBreak::LeastMotion)
}

fn refine_with(
    shift: &Shift,
    a: &Frame,
    b: &Frame,
    w: usize,
    tie_break: TieBreak,
) -> Result<Shift> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    let (s0, t0) = (2 * shift.s, 2 * shift.t);
    let scores = nine_scores(a, b, s0, t0, w);
    let candidates = scores
        .iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|v| (s0 + k as isize / 3 - 1, t0 + k as isize % 3 - 1, v)));
    let scale = candidates.clone().fold(0.0f64, |m, (_, _, v)| m.max(v));
    select_best(candidates, scale, tie_break).ok_or_else(|| {
        Error::AlignmentFailed(format!(
            "no refinement candidate around ({s0}, {t0}) lies within bound {w}"
        ))
    })
}

/// Scores of the nine candidates around `(s0, t0)`, `None` where out of range.
/// Index `k = 3 * (u + 1) + (v + 1)`.
///
/// One pass over the template rows: each template row is paired with the
/// three frame rows it can overlap, and each such row pair feeds the three
/// column offsets at once.
fn nine_scores(a: &Frame, b: &Frame, s0: isize, t0: isize, w: usize) -> [Option<f64>; 9] {
    let (m, n) = a.dims();
    let lim = (w.min(m.min(n))) as isize;
    let ok = |d: isize| d.abs() < lim;
    let row_ok = [ok(s0 - 1), ok(s0), ok(s0 + 1)];
    let col_ok = [ok(t0 - 1), ok(t0), ok(t0 + 1)];

    let mut sums = [0.0f64; 9];
    let mi = m as isize;
    for i in 0..mi {
        let rb = b.row(i as usize);
        for u in 0..3 {
            let su = s0 + u as isize - 1;
            if !row_ok[u] || i + su < 0 || i + su >= mi {
                continue;
            }
            let ra = a.row((i + su) as usize);
            let acc: &mut [f64; 3] = (&mut sums[3 * u..3 * u + 3]).try_into().unwrap();
            row_triplet(ra, rb, t0, col_ok, acc);
        }
    }

    let mut out = [None; 9];
    for u in 0..3 {
        for v in 0..3 {
            if row_ok[u] && col_ok[v] {
                let su = (s0 + u as isize - 1).unsigned_abs();
                let tv = (t0 + v as isize - 1).unsigned_abs();
                out[3 * u + v] = Some(sums[3 * u + v] / ((m - su) * (n - tv)) as f64);
            }
        }
    }
    out
}

/// Adds `sum_j (ra[j + t0 + v] - rb[j])^2` over each column offset `v`.
fn row_triplet(ra: &[f64], rb: &[f64], t0: isize, col_ok: [bool; 3], acc: &mut [f64; 3]) {
    let n = rb.len() as isize;
    let range = |tv: isize| (0.max(-tv), n.min(n - tv));
    let ranges = [range(t0 - 1), range(t0), range(t0 + 1)];
    if col_ok.iter().all(|&x| x) {
        // columns valid for all three offsets
        let lo = ranges.iter().map(|r| r.0).max().unwrap();
        let hi = ranges.iter().map(|r| r.1).min().unwrap();
        let (mut x0, mut x1, mut x2) = (0.0, 0.0, 0.0);
        if lo < hi {
            let base = (lo + t0 - 1) as usize;
            let len = (hi - lo) as usize;
            let win = &ra[base..base + len + 2];
            for (k, &bj) in rb[lo as usize..hi as usize].iter().enumerate() {
                let d0 = win[k] - bj;
                let d1 = win[k + 1] - bj;
                let d2 = win[k + 2] - bj;
                x0 += d0 * d0;
                x1 += d1 * d1;
                x2 += d2 * d2;
            }
        }
        acc[0] += x0;
        acc[1] += x1;
        acc[2] += x2;
        // leftovers outside the common range
        for v in 0..3 {
            let tv = t0 + v as isize - 1;
            let (s, e) = ranges[v];
            let (cs, ce) = if lo < hi { (lo, hi) } else { (e, e) };
            for j in (s..cs).chain(ce.max(s)..e) {
                let d = ra[(j + tv) as usize] - rb[j as usize];
                acc[v] += d * d;
            }
        }
    } else {
        for v in 0..3 {
            if !col_ok[v] {
                continue;
            }
            let tv = t0 + v as isize - 1;
            let (s, e) = ranges[v];
            let mut x = 0.0;
            for j in s..e {
                let d = ra[(j + tv) as usize] - rb[j as usize];
                x += d * d;
            }
            acc[v] += x;
        }
    }
}

/// What happened at one pyramid level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelStep {
    pub level: usize,
    /// Doubled coarser shift scored at this level (for the coarsest level,
    /// the exhaustive-search result itself).
    pub seed: Shift,
    pub chosen: Shift,
}

/// Aligns one frame against a prepared template pyramid.
pub fn align_frame(a: &Frame, pyramid: &TemplatePyramid, config: &AlignConfig) -> Result<Shift> {
    Ok(align_frame_traced(a, pyramid, config)?
        .last()
        .expect("trace covers level 0")
        .chosen)
}

/// As [`align_frame`] but returns the per-level steps, coarsest first.
pub fn align_frame_traced(
    a: &Frame,
    pyramid: &TemplatePyramid,
    config: &AlignConfig,
) -> Result<Vec<LevelStep>> {
    if a.dims() != pyramid.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: pyramid.dims(),
        });
    }
    let depth = pyramid.depth();
    let frames = build_pyramid(a, depth)?;
    let top = &pyramid.levels[depth];
    let mut best = top.score_grid(&frames[depth])?.argmin(config.tie_break);
    if depth == 0 {
        // the FFT path carries round-off; report the exact objective
        best.score = crate::overlap::score_oracle(&frames[0], &top.frame, best.s, best.t)?;
    }
    let mut trace = vec![LevelStep {
        level: depth,
        seed: best,
        chosen: best,
    }];
    for level in (0..depth).rev() {
        let lt = &pyramid.levels[level];
        let fine = &frames[level];
        let (ds, dt) = (2 * best.s, 2 * best.t);
        let seed_score = if ds.unsigned_abs().max(dt.unsigned_abs()) < lt.w {
            crate::overlap::score_oracle(fine, &lt.frame, ds, dt)?
        } else {
            f64::INFINITY
        };
        best = refine_with(&best, fine, &lt.frame, lt.w, config.tie_break)?;
        trace.push(LevelStep {
            level,
            seed: Shift::new(ds, dt, seed_score),
            chosen: best,
        });
    }
    Ok(trace)
}

/// Per-frame annotations carried into the shift log.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FrameFlags {
    /// The chosen shift sits on the edge of the search range; the true
    /// optimum may lie outside it.
    pub boundary: bool,
    /// Alignment errored; the frame was left unshifted.
    pub failed: bool,
}

impl FrameFlags {
    pub fn tokens(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.boundary {
            out.push("boundary");
        }
        if self.failed {
            out.push("failed");
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct AlignmentResult {
    pub shifts: Vec<Shift>,
    pub flags: Vec<FrameFlags>,
    pub corrected: Stack,
    pub config: AlignConfig,
}

impl AlignmentResult {
    pub fn failed_frames(&self) -> usize {
        self.flags.iter().filter(|f| f.failed).count()
    }
}

/// Aligns every frame of `stack` against the configured template and
/// returns the shift trajectory plus the corrected stack.
///
/// Frames are processed independently on `config.threads` workers; results
/// do not depend on the worker count.
pub fn align_stack(
    stack: &Stack,
    config: &AlignConfig,
    progress: Option<ProgressSink<'_>>,
) -> Result<AlignmentResult> {
    let dims = stack.dims();
    config.validate_for(dims)?;
    let (template, template_index) = match &config.template {
        TemplateSource::Index(k) => {
            let f = stack.frames().get(*k).ok_or_else(|| {
                Error::Config(format!(
                    "template index {k} out of range for {} frames",
                    stack.len()
                ))
            })?;
            (f, Some(*k))
        }
        TemplateSource::External(f) => (f, None),
    };
    let pyramid = TemplatePyramid::for_config(template, config)?;
    let w = config.max_shift;
    let total = stack.len();
    let done = AtomicUsize::new(0);

    let work = |(k, frame): (usize, &Frame)| -> (Shift, FrameFlags, Frame) {
        let (shift, flags) = if Some(k) == template_index {
            (Shift::zero(), FrameFlags::default())
        } else {
            match align_frame(frame, &pyramid, config) {
                Ok(sh) => {
                    let boundary = sh.max_abs() + 1 == w && w > 1;
                    (
                        sh,
                        FrameFlags {
                            boundary,
                            failed: false,
                        },
                    )
                }
                Err(_) => {
                    let score = crate::overlap::score_oracle(frame, template, 0, 0).unwrap_or(0.0);
                    (
                        Shift::new(0, 0, score),
                        FrameFlags {
                            boundary: false,
                            failed: true,
                        },
                    )
                }
            }
        };
        let corrected = apply_shift(frame, &shift);
        let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
        if let Some(sink) = progress {
            sink(finished, total);
        }
        (shift, flags, corrected)
    };

    let outcomes: Vec<(Shift, FrameFlags, Frame)> = match config.threads {
        Some(1) => stack.frames().iter().enumerate().map(work).collect(),
        threads => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            pool.install(|| stack.frames().par_iter().enumerate().map(work).collect())
        }
    };

    let mut shifts = Vec::with_capacity(total);
    let mut flags = Vec::with_capacity(total);
    let mut frames = Vec::with_capacity(total);
    for (s, f, c) in outcomes {
        shifts.push(s);
        flags.push(f);
        frames.push(c);
    }
    Ok(AlignmentResult {
        shifts,
        flags,
        corrected: Stack::new(frames)?,
        config: config.clone(),
    })
}
