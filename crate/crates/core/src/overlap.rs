//! Overlap geometry, the direct score oracle, and the corner-anchored prefix
//! tables that give the two squared-intensity sums for every shift in O(mn).
//!
//! For a frame `a`, template `b` (both `m x n`) and shift `(s, t)`, the overlap
//! `D(s, t)` is the set of template pixels `(i, j)` with `(i + s, j + t)` also
//! inside the frame. The objective is
//!
//! ```text
//! f(s, t) = (1 / |D|) * sum_{(i,j) in D} (a[i+s][j+t] - b[i][j])^2
//!         = (sq_a(s, t) + sq_b(s, t) - 2 h(s, t)) / |D|
//! ```
//!
//! where `sq_a`, `sq_b` are sums of squares over the two overlapping
//! rectangles and `h` is the cross term from [`crate::xcorr`].

use std::ops::Range;

use crate::config::TieBreak;
use crate::error::{Error, Result};
use crate::frame::{Frame, Shift};

/// Scores closer than this fraction of the per-pixel energy `(sq_a + sq_b) / |D|`
/// are treated as tied; FFT round-off sits several orders of magnitude lower.
pub const TIE_EPS_REL: f64 = 1e-10;

/// Dense table indexed by shifts `-(w-1) ..= w-1` in both axes.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftTable {
    w: usize,
    values: Vec<f64>,
}

impl ShiftTable {
    pub fn zeros(w: usize) -> Self {
        assert!(w >= 1, "shift bound must be positive");
        let side = 2 * w - 1;
        ShiftTable {
            w,
            values: vec![0.0; side * side],
        }
    }

    pub fn bound(&self) -> usize {
        self.w
    }

    pub fn side(&self) -> usize {
        2 * self.w - 1
    }

    pub fn contains(&self, s: isize, t: isize) -> bool {
        let r = self.w as isize;
        s.abs() < r && t.abs() < r
    }

    #[inline]
    fn index(&self, s: isize, t: isize) -> usize {
        debug_assert!(
            self.contains(s, t),
            "shift ({s}, {t}) outside bound {}",
            self.w
        );
        let off = self.w as isize - 1;
        ((s + off) as usize) * self.side() + (t + off) as usize
    }

    #[inline]
    pub fn get(&self, s: isize, t: isize) -> f64 {
        self.values[self.index(s, t)]
    }

    #[inline]
    pub fn set(&mut self, s: isize, t: isize, v: f64) {
        let idx = self.index(s, t);
        self.values[idx] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All `(s, t, value)` triples, `s` major.
    pub fn iter(&self) -> impl Iterator<Item = (isize, isize, f64)> + Clone + '_ {
        let off = self.w as isize - 1;
        let side = self.side();
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| ((k / side) as isize - off, (k % side) as isize - off, v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// The overlap rectangle for one shift, in template coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlapRegion {
    pub s: isize,
    pub t: isize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub area: usize,
}

impl OverlapRegion {
    /// Iterates the template-coordinate pairs in the region.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .clone()
            .flat_map(move |i| self.cols.clone().map(move |j| (i, j)))
    }
}

fn axis_range(len: usize, shift: isize) -> Range<usize> {
    let len = len as isize;
    (0.max(-shift) as usize)..(len.min(len - shift) as usize)
}

pub fn overlap(rows: usize, cols: usize, s: isize, t: isize) -> Result<OverlapRegion> {
    if s.unsigned_abs() >= rows.min(cols) || t.unsigned_abs() >= rows.min(cols) {
        return Err(Error::EmptyOverlap { s, t, rows, cols });
    }
    let r = axis_range(rows, s);
    let c = axis_range(cols, t);
    let area = r.len() * c.len();
    Ok(OverlapRegion {
        s,
        t,
        rows: r,
        cols: c,
        area,
    })
}

fn check_same_dims(a: &Frame, b: &Frame) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    Ok(())
}

/// Grid operations need every lag `|s|, |t| <= w - 1` to keep a nonempty
/// overlap, i.e. `1 <= w <= min(m, n)`. Alignment configs are stricter.
pub(crate) fn check_bound(w: usize, rows: usize, cols: usize) -> Result<()> {
    if w == 0 || w > rows.min(cols) {
        return Err(Error::ShiftBoundOutOfRange { w, rows, cols });
    }
    Ok(())
}

/// Area-normalized squared difference at one shift, by direct summation.
pub fn score_oracle(a: &Frame, b: &Frame, s: isize, t: isize) -> Result<f64> {
    check_same_dims(a, b)?;
    let region = overlap(a.rows(), a.cols(), s, t)?;
    let mut acc = 0.0;
    for i in region.rows.clone() {
        let ra = a.row((i as isize + s) as usize);
        let rb = b.row(i);
        for j in region.cols.clone() {
            let d = ra[(j as isize + t) as usize] - rb[j];
            acc += d * d;
        }
    }
    Ok(acc / region.area as f64)
}

/// Exhaustive direct search: `score_oracle` at every shift with
/// `max(|s|, |t|) < w`, exact ties resolved by `tie_break`.
pub fn oracle_argmin(a: &Frame, b: &Frame, w: usize, tie_break: TieBreak) -> Result<Shift> {
    check_same_dims(a, b)?;
    check_bound(w, a.rows(), a.cols())?;
    let r = w as isize - 1;
    let mut scores = Vec::with_capacity((2 * w - 1) * (2 * w - 1));
    for s in -r..=r {
        for t in -r..=r {
            scores.push((s, t, score_oracle(a, b, s, t)?));
        }
    }
    Ok(select_best(scores.into_iter(), 0.0, tie_break).expect("at least one shift"))
}

/// Sums of squares over the overlapping rectangles, for every shift in range.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixTables {
    pub sq_a: ShiftTable,
    pub sq_b: ShiftTable,
}

/// Squared-intensity sums of one image over every rectangle that touches a
/// given corner and is at most `w - 1` rows/columns short of the full frame.
///
/// `tables[corner][k * w + l]` is the sum over the `(m - k) x (n - l)` block
/// anchored at that corner. Corners are indexed `top_left, top_right,
/// bottom_left, bottom_right`.
#[derive(Clone, Debug)]
pub(crate) struct CornerSums {
    w: usize,
    tables: [Vec<f64>; 4],
}

impl CornerSums {
    pub(crate) fn new(f: &Frame, w: usize) -> Self {
        let tables = [
            corner_table(f, w, false, false),
            corner_table(f, w, false, true),
            corner_table(f, w, true, false),
            corner_table(f, w, true, true),
        ];
        CornerSums { w, tables }
    }

    /// Sum over the block with `rows - |dr|` rows taken from the bottom when
    /// `dr > 0` (top otherwise), and likewise for columns.
    #[inline]
    pub(crate) fn block(&self, dr: isize, dc: isize) -> f64 {
        let corner = usize::from(dr > 0) * 2 + usize::from(dc > 0);
        self.tables[corner][dr.unsigned_abs() * self.w + dc.unsigned_abs()]
    }

    /// `sum over D(s, t)` of the squared frame pixels `a[i + s][j + t]`.
    pub(crate) fn table_as_frame(&self) -> ShiftTable {
        let mut out = ShiftTable::zeros(self.w);
        let r = self.w as isize - 1;
        for s in -r..=r {
            for t in -r..=r {
                out.set(s, t, self.block(s, t));
            }
        }
        out
    }

    /// `sum over D(s, t)` of the squared template pixels `b[i][j]`.
    pub(crate) fn table_as_template(&self) -> ShiftTable {
        let mut out = ShiftTable::zeros(self.w);
        let r = self.w as isize - 1;
        for s in -r..=r {
            for t in -r..=r {
                out.set(s, t, self.block(-s, -t));
            }
        }
        out
    }
}

/// Runs `g(p, q) = g(p-1, q) + g(p, q-1) - g(p-1, q-1) + x(p, q)^2` outward
/// from one corner, keeping two rows, and records the `w x w` block of
/// largest rectangles.
fn corner_table(f: &Frame, w: usize, from_bottom: bool, from_right: bool) -> Vec<f64> {
    let (m, n) = f.dims();
    debug_assert!(w <= m && w <= n);
    let mut out = vec![0.0; w * w];
    let mut prev = vec![0.0; n + 1];
    let mut cur = vec![0.0; n + 1];
    let px = f.pixels();
    for p in 1..=m {
        let i = if from_bottom { m - p } else { p - 1 };
        let row = &px[i * n..(i + 1) * n];
        cur[0] = 0.0;
        for q in 1..=n {
            let x = if from_right { row[n - q] } else { row[q - 1] };
            cur[q] = prev[q] + cur[q - 1] - prev[q - 1] + x * x;
        }
        let k = m - p;
        if k < w {
            for l in 0..w {
                out[k * w + l] = cur[n - l];
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    out
}

pub fn build_prefix_tables(a: &Frame, b: &Frame, w: usize) -> Result<PrefixTables> {
    check_same_dims(a, b)?;
    check_bound(w, a.rows(), a.cols())?;
    Ok(PrefixTables {
        sq_a: CornerSums::new(a, w).table_as_frame(),
        sq_b: CornerSums::new(b, w).table_as_template(),
    })
}

/// `f(s, t)` for every shift with `max(|s|, |t|) < w`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreGrid {
    pub table: ShiftTable,
    /// Largest `(sq_a + sq_b) / |D|` over the grid; sets the round-off scale.
    pub energy: f64,
}

impl ScoreGrid {
    pub fn bound(&self) -> usize {
        self.table.bound()
    }

    pub fn get(&self, s: isize, t: isize) -> f64 {
        self.table.get(s, t)
    }

    /// Minimal-score shift under the tie-break policy.
    pub fn argmin(&self, tie_break: TieBreak) -> Shift {
        select_best(self.table.iter(), self.energy, tie_break).expect("score grid is never empty")
    }
}

/// Picks the minimal score among candidates. Scores within
/// `TIE_EPS_REL * scale` of the minimum are resolved by `tie_break`.
pub fn select_best(
    candidates: impl Iterator<Item = (isize, isize, f64)> + Clone,
    scale: f64,
    tie_break: TieBreak,
) -> Option<Shift> {
    let min = candidates
        .clone()
        .map(|(_, _, v)| v)
        .min_by(f64::total_cmp)?;
    let tol = TIE_EPS_REL * scale;
    let TieBreak::LeastMotion = tie_break;
    candidates
        .filter(|&(_, _, v)| v <= min + tol)
        .min_by_key(|&(s, t, _)| (s.abs() + t.abs(), s, t))
        .map(|(s, t, v)| Shift::new(s, t, v))
}

pub fn assemble_scores(
    sq: &PrefixTables,
    h: &crate::xcorr::CorrGrid,
    dims: (usize, usize),
) -> Result<ScoreGrid> {
    let w = sq.sq_a.bound();
    for other in [sq.sq_b.bound(), h.table.bound()] {
        if other != w {
            return Err(Error::RangeMismatch {
                left: w,
                right: other,
            });
        }
    }
    let (m, n) = dims;
    check_bound(w, m, n)?;
    let mut table = ShiftTable::zeros(w);
    let sa = sq.sq_a.values();
    let sb = sq.sq_b.values();
    let hv = h.table.values();
    let side = table.side();
    let off = w as isize - 1;
    let mut energy = 0.0f64;
    for (k, out) in table.values.iter_mut().enumerate() {
        let s = (k / side) as isize - off;
        let t = (k % side) as isize - off;
        let area = ((m - s.unsigned_abs()) * (n - t.unsigned_abs())) as f64;
        energy = energy.max((sa[k] + sb[k]) / area);
        // true scores are nonnegative; anything below zero is cancellation residue
        *out = ((sa[k] + sb[k] - 2.0 * hv[k]) / area).max(0.0);
    }
    Ok(ScoreGrid { table, energy })
}
