//! Translation-only motion correction for grayscale image stacks.
//!
//! Every frame is compared against a template at every integer shift inside
//! a user bound, and the shift minimizing the mean squared difference over
//! the overlapping region wins. The search over all shifts costs
//! `O(mn log mn)` per frame: the two squared-intensity sums come from
//! corner-anchored prefix tables ([`overlap`]) and the cross term from one
//! zero-padded FFT product ([`xcorr`]). Large frames are searched on a
//! downsampled copy first and refined on the nine neighbours of the doubled
//! shift at each finer level ([`align`]).

pub mod align;
pub mod cli;
pub mod config;
pub mod error;
pub mod frame;
pub mod io;
pub mod overlap;
pub mod synth;
pub mod xcorr;

pub use align::{
    align_frame, align_frame_traced, align_stack, apply_shift, coarse_align, downsample,
    refine_upsample, score_grid, AlignmentResult, FrameFlags, TemplatePyramid,
};
pub use config::{make_auto_config, AlignConfig, Levels, TemplateSource, TieBreak};
pub use error::{Error, Result};
pub use frame::{BitDepth, Frame, Shift, Stack};
pub use overlap::{
    assemble_scores, build_prefix_tables, oracle_argmin, overlap, score_oracle, ScoreGrid,
};
pub use xcorr::{compute_corr_grid, direct_corr, rotate_180, CorrGrid};
