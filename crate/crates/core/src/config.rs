//! Alignment configuration and the automatic defaults.

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Deepest pyramid accepted. Three or more halvings destroy the coarse search.
pub const MAX_DOWNSAMPLE_LEVELS: usize = 2;

/// Frames whose rows or columns exceed this are downsampled once in auto mode.
pub const AUTO_DOWNSAMPLE_THRESHOLD: usize = 256;

/// Where the reference image comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum TemplateSource {
    /// A frame of the stack being aligned.
    Index(usize),
    /// An image supplied from elsewhere, e.g. an earlier session.
    External(Frame),
}

/// Pyramid depth: a fixed count of 2x downsamplings, or chosen from frame size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Levels {
    Auto,
    Fixed(usize),
}

/// Policy for choosing among equal minimal scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Smallest `|s| + |t|`, then lexicographically smallest `(s, t)`.
    #[default]
    LeastMotion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignConfig {
    /// Exclusive bound `w`: only shifts with `max(|s|, |t|) < w` are searched.
    pub max_shift: usize,
    pub template: TemplateSource,
    pub levels: Levels,
    pub tie_break: TieBreak,
    /// Worker threads for stack alignment; `None` uses every available core.
    pub threads: Option<usize>,
}

impl AlignConfig {
    pub fn new(max_shift: usize, levels: Levels) -> Result<Self> {
        if max_shift == 0 {
            return Err(Error::Config("max shift must be at least 1".into()));
        }
        if let Levels::Fixed(l) = levels {
            check_level_cap(l)?;
        }
        Ok(AlignConfig {
            max_shift,
            template: TemplateSource::Index(0),
            levels,
            tie_break: TieBreak::LeastMotion,
            threads: None,
        })
    }

    pub fn with_template(mut self, template: TemplateSource) -> Self {
        self.template = template;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    /// Concrete pyramid depth for frames of the given size.
    pub fn resolved_levels(&self, dims: (usize, usize)) -> usize {
        match self.levels {
            Levels::Fixed(l) => l,
            Levels::Auto => auto_levels(dims),
        }
    }

    /// Checks that the configuration can be applied to `rows x cols` frames,
    /// including at the coarsest pyramid level.
    pub fn validate_for(&self, dims: (usize, usize)) -> Result<()> {
        let (rows, cols) = dims;
        let levels = self.resolved_levels(dims);
        check_level_cap(levels)?;
        if self.max_shift == 0 || self.max_shift >= rows.min(cols) {
            return Err(Error::ShiftBoundOutOfRange {
                w: self.max_shift,
                rows,
                cols,
            });
        }
        for level in 1..=levels {
            let (cr, cc) = (rows >> level, cols >> level);
            let cw = level_bound(self.max_shift, level);
            if cw >= cr.min(cc) {
                return Err(Error::Config(format!(
                    "at pyramid level {level} frames are {cr}x{cc}, too small for shift bound {cw}"
                )));
            }
        }
        if let TemplateSource::External(t) = &self.template {
            if t.dims() != dims {
                return Err(Error::DimensionMismatch {
                    left: t.dims(),
                    right: dims,
                });
            }
        }
        Ok(())
    }
}

fn check_level_cap(levels: usize) -> Result<()> {
    if levels > MAX_DOWNSAMPLE_LEVELS {
        return Err(Error::Config(format!(
            "{levels} downsampling levels requested; at most {MAX_DOWNSAMPLE_LEVELS} are supported \
             because deeper pyramids cause severe alignment errors"
        )));
    }
    Ok(())
}

fn auto_levels((rows, cols): (usize, usize)) -> usize {
    usize::from(rows > AUTO_DOWNSAMPLE_THRESHOLD || cols > AUTO_DOWNSAMPLE_THRESHOLD)
}

/// Shift bound used at pyramid `level`: `max(1, floor(w / 2^level))`.
pub fn level_bound(w: usize, level: usize) -> usize {
    (w >> level).max(1)
}

/// Default configuration for `rows x cols` frames: `w = floor(min/3)`, one
/// downsampling when either side exceeds 256, template = first frame.
pub fn make_auto_config(dims: (usize, usize)) -> Result<AlignConfig> {
    let (rows, cols) = dims;
    if rows < 3 || cols < 3 {
        return Err(Error::Config(format!(
            "{rows}x{cols} frames are too small; both sides must be at least 3"
        )));
    }
    AlignConfig::new(rows.min(cols) / 3, Levels::Fixed(auto_levels(dims)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_config_512() {
        let c = make_auto_config((512, 512)).unwrap();
        assert_eq!(c.max_shift, 170);
        assert_eq!(c.levels, Levels::Fixed(1));
        assert_eq!(c.template, TemplateSource::Index(0));
    }

    #[test]
    fn auto_config_256_and_smallest() {
        let c = make_auto_config((256, 256)).unwrap();
        assert_eq!((c.max_shift, c.levels), (85, Levels::Fixed(0)));
        let c = make_auto_config((3, 3)).unwrap();
        assert_eq!((c.max_shift, c.levels), (1, Levels::Fixed(0)));
        let c = make_auto_config((257, 100)).unwrap();
        assert_eq!((c.max_shift, c.levels), (33, Levels::Fixed(1)));
    }

    #[test]
    fn auto_config_rejects_tiny() {
        assert!(make_auto_config((2, 10)).is_err());
        assert!(make_auto_config((10, 2)).is_err());
    }

    #[test]
    fn level_cap() {
        assert!(AlignConfig::new(5, Levels::Fixed(2)).is_ok());
        assert!(AlignConfig::new(5, Levels::Fixed(3)).is_err());
        assert!(AlignConfig::new(0, Levels::Fixed(0)).is_err());
    }

    #[test]
    fn validate_checks_coarse_level() {
        // w = 4 < 5, but at level 1 frames are 2x2 and w_1 = 2.
        let c = AlignConfig::new(4, Levels::Fixed(1)).unwrap();
        assert!(c.validate_for((5, 5)).is_err());
        assert!(c.validate_for((6, 6)).is_ok());
        let c = AlignConfig::new(6, Levels::Fixed(0)).unwrap();
        assert!(c.validate_for((6, 9)).is_err());
    }

    #[test]
    fn auto_config_bound_invariant() {
        for m in 3..40 {
            for n in 3..40 {
                let c = make_auto_config((m, n)).unwrap();
                assert!(c.max_shift >= 1 && c.max_shift < m.min(n));
                c.validate_for((m, n)).unwrap();
            }
        }
    }
}
