//! Synthetic calcium-imaging-like stacks with known motion.
//!
//! A static scene of Gaussian "cells" on a flat baseline is translated by a
//! per-frame trajectory (zero-filled borders) and corrupted with additive
//! Gaussian noise. Everything is reproducible from `seed`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::align::apply_shift;
use crate::error::{Error, Result};
use crate::frame::{BitDepth, Frame, Shift, Stack};

#[derive(Clone, Debug, PartialEq)]
pub enum Trajectory {
    /// Integer random walk from `(0, 0)`; each step moves each axis by at
    /// most `max_step`, and positions are clamped to `[-max_extent, max_extent]`.
    Walk {
        max_step: usize,
        max_extent: usize,
    },
    Explicit(Vec<(isize, isize)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub rows: usize,
    pub cols: usize,
    pub frames: usize,
    pub cells: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    pub baseline: f64,
    pub peak: f64,
    pub trajectory: Trajectory,
    pub noise_sigma: f64,
    pub seed: u64,
    pub depth: BitDepth,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            rows: 128,
            cols: 128,
            frames: 50,
            cells: 60,
            radius_min: 2.0,
            radius_max: 5.0,
            baseline: 200.0,
            peak: 3000.0,
            trajectory: Trajectory::Walk {
                max_step: 4,
                max_extent: 20,
            },
            noise_sigma: 0.0,
            seed: 1,
            depth: BitDepth::U16,
        }
    }
}

/// On-disk form: flat `key = value` lines (TOML syntax).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    rows: usize,
    cols: usize,
    frames: usize,
    cells: Option<usize>,
    radius_min: Option<f64>,
    radius_max: Option<f64>,
    baseline: Option<f64>,
    peak: Option<f64>,
    noise_sigma: Option<f64>,
    seed: Option<u64>,
    bit_depth: Option<String>,
    walk_max_step: Option<usize>,
    walk_max_extent: Option<usize>,
    shifts: Option<Vec<[isize; 2]>>,
}

impl SynthSpec {
    /// Parses the flat key-value format, e.g.
    ///
    /// ```text
    /// rows = 128
    /// cols = 128
    /// frames = 50
    /// noise_sigma = 0.0
    /// seed = 7
    /// walk_max_step = 3
    /// walk_max_extent = 20
    /// # or: shifts = [[0, 0], [3, -2]]
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let f: SpecFile = toml::from_str(text).map_err(|e| Error::SynthSpec(e.to_string()))?;
        let d = SynthSpec::default();
        let depth = match f.bit_depth.as_deref() {
            None | Some("16") | Some("u16") => BitDepth::U16,
            Some("8") | Some("u8") => BitDepth::U8,
            Some("float") => BitDepth::Float,
            Some(other) => return Err(Error::SynthSpec(format!("unknown bit_depth {other:?}"))),
        };
        let trajectory = match (f.shifts, f.walk_max_step, f.walk_max_extent) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(Error::SynthSpec(
                    "give either `shifts` or the walk_* keys, not both".into(),
                ))
            }
            (Some(list), None, None) => {
                Trajectory::Explicit(list.into_iter().map(|[s, t]| (s, t)).collect())
            }
            (None, step, extent) => {
                let Trajectory::Walk {
                    max_step,
                    max_extent,
                } = d.trajectory
                else {
                    unreachable!()
                };
                Trajectory::Walk {
                    max_step: step.unwrap_or(max_step),
                    max_extent: extent.unwrap_or(max_extent),
                }
            }
        };
        let spec = SynthSpec {
            rows: f.rows,
            cols: f.cols,
            frames: f.frames,
            cells: f.cells.unwrap_or(d.cells),
            radius_min: f.radius_min.unwrap_or(d.radius_min),
            radius_max: f.radius_max.unwrap_or(d.radius_max),
            baseline: f.baseline.unwrap_or(d.baseline),
            peak: f.peak.unwrap_or(d.peak),
            trajectory,
            noise_sigma: f.noise_sigma.unwrap_or(d.noise_sigma),
            seed: f.seed.unwrap_or(d.seed),
            depth,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::SynthSpec(msg));
        if self.rows < 3 || self.cols < 3 || self.frames == 0 {
            return bad(format!(
                "need rows, cols >= 3 and frames >= 1, got {}x{}x{}",
                self.rows, self.cols, self.frames
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            ));
        }
        if !(self.radius_min > 0.0 && self.radius_min <= self.radius_max) {
            return bad("need 0 < radius_min <= radius_max".into());
        }
        let limit = self.rows.min(self.cols);
        // shifts must satisfy max(|s|, |t|) < min(m, n) / 3
        let in_bound = |d: usize| 3 * d < limit;
        match &self.trajectory {
            Trajectory::Walk { max_extent, .. } if !in_bound(*max_extent) => {
                bad(format!("walk extent {max_extent} is not below {limit}/3"))
            }
            Trajectory::Explicit(list) if list.len() != self.frames => bad(format!(
                "trajectory has {} shifts for {} frames",
                list.len(),
                self.frames
            )),
            Trajectory::Explicit(list) => {
                match list
                    .iter()
                    .find(|(s, t)| !in_bound(s.unsigned_abs().max(t.unsigned_abs())))
                {
                    Some(sh) => bad(format!("shift {sh:?} is not below {limit}/3")),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

/// The unshifted, noise-free scene.
pub fn render_scene(spec: &SynthSpec) -> Result<Frame> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    scene(spec, &mut rng)
}

fn scene(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Result<Frame> {
    let (m, n) = (spec.rows, spec.cols);
    let mut px = vec![spec.baseline; m * n];
    for _ in 0..spec.cells {
        let ci = rng.random_range(0.0..m as f64);
        let cj = rng.random_range(0.0..n as f64);
        let r = if spec.radius_max > spec.radius_min {
            rng.random_range(spec.radius_min..spec.radius_max)
        } else {
            spec.radius_min
        };
        let amp = spec.peak * rng.random_range(0.4..1.0);
        let reach = (4.0 * r).ceil() as isize;
        let inv = 1.0 / (2.0 * r * r);
        let (i0, j0) = (ci as isize, cj as isize);
        for i in (i0 - reach).max(0)..(i0 + reach + 1).min(m as isize) {
            for j in (j0 - reach).max(0)..(j0 + reach + 1).min(n as isize) {
                let di = i as f64 + 0.5 - ci;
                let dj = j as f64 + 0.5 - cj;
                px[i as usize * n + j as usize] += amp * (-(di * di + dj * dj) * inv).exp();
            }
        }
    }
    let px = px.into_iter().map(|v| spec.depth.quantize(v)).collect();
    Frame::new(m, n, px, spec.depth)
}

fn walk(
    rng: &mut ChaCha8Rng,
    frames: usize,
    max_step: usize,
    max_extent: usize,
) -> Vec<(isize, isize)> {
    let step = max_step as i64;
    let ext = max_extent as isize;
    let mut pos = (0isize, 0isize);
    let mut out = Vec::with_capacity(frames);
    for k in 0..frames {
        if k > 0 {
            pos.0 = (pos.0 + rng.random_range(-step..=step) as isize).clamp(-ext, ext);
            pos.1 = (pos.1 + rng.random_range(-step..=step) as isize).clamp(-ext, ext);
        }
        out.push(pos);
    }
    out
}

/// Renders the stack and returns it with the per-frame ground-truth shifts.
pub fn generate(spec: &SynthSpec) -> Result<(Stack, Vec<Shift>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let base = scene(spec, &mut rng)?;
    let traj = match &spec.trajectory {
        Trajectory::Walk {
            max_step,
            max_extent,
        } => walk(&mut rng, spec.frames, *max_step, *max_extent),
        Trajectory::Explicit(list) => list.clone(),
    };
    let noise = (spec.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.noise_sigma).expect("sigma validated"));
    let mut frames = Vec::with_capacity(spec.frames);
    for &(s, t) in &traj {
        let moved = apply_shift(&base, &Shift::new(s, t, 0.0));
        let frame = match &noise {
            None => moved,
            Some(dist) => {
                let px = moved
                    .pixels()
                    .iter()
                    .map(|&v| spec.depth.quantize((v + dist.sample(&mut rng)).max(0.0)))
                    .collect();
                Frame::new(spec.rows, spec.cols, px, spec.depth)?
            }
        };
        frames.push(frame);
    }
    let truth = traj
        .into_iter()
        .map(|(s, t)| Shift::new(s, t, 0.0))
        .collect();
    Ok((Stack::new(frames)?, truth))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryReport {
    /// Chebyshev distance between each recovered shift and the inverse of its truth.
    pub errors: Vec<usize>,
    pub exact_rate: f64,
    pub max_error: usize,
}

impl RecoveryReport {
    pub fn within(&self, tol: usize) -> f64 {
        self.errors.iter().filter(|&&e| e <= tol).count() as f64 / self.errors.len() as f64
    }
}

/// Compares recovered shifts against the generator's trajectory. Aligning a
/// frame that was moved by `truth` yields `truth.inverse()`.
pub fn score_recovery(recovered: &[Shift], truth: &[Shift]) -> Result<RecoveryReport> {
    if recovered.len() != truth.len() {
        return Err(Error::InvalidStack(format!(
            "{} recovered shifts for {} ground-truth shifts",
            recovered.len(),
            truth.len()
        )));
    }
    let errors: Vec<usize> = recovered
        .iter()
        .zip(truth)
        .map(|(r, t)| r.chebyshev(&t.inverse()))
        .collect();
    let exact = errors.iter().filter(|&&e| e == 0).count();
    Ok(RecoveryReport {
        exact_rate: if errors.is_empty() {
            1.0
        } else {
            exact as f64 / errors.len() as f64
        },
        max_error: errors.iter().copied().max().unwrap_or(0),
        errors,
    })
}
