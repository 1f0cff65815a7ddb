// Coarse-to-fine alignment: exhaustive search on a 2x or 4x downsampled
// pair, then the doubled shift is refined over its nine neighbours at each
// finer level. Prints the per-level trace.
//
//     cargo run --example pyramid_refinement

use stackalign::synth::{render_scene, SynthSpec};
use stackalign::{align_frame_traced, apply_shift, AlignConfig, Levels, Shift, TemplatePyramid};

pub fn run_example() -> stackalign::Result<()> {
    let spec = SynthSpec {
        rows: 160,
        cols: 144,
        cells: 90,
        ..SynthSpec::default()
    };
    let template = render_scene(&spec)?;
    let frame = apply_shift(&template, &Shift::new(13, -22, 0.0));

    for levels in 0..=2 {
        let config = AlignConfig::new(40, Levels::Fixed(levels))?;
        let pyramid = TemplatePyramid::for_config(&template, &config)?;
        println!("{levels} downsampling level(s):");
        for step in align_frame_traced(&frame, &pyramid, &config)? {
            let (m, n) = pyramid.frame(step.level).dims();
            println!(
                "  level {} ({m}x{n}, bound {}): seed {:?} -> {:?}, score {:.2}",
                step.level,
                pyramid.bound(step.level),
                step.seed.offset(),
                step.chosen.offset(),
                step.chosen.score
            );
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
