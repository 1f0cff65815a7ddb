// Times the fast search against exhaustive direct scoring on one frame pair,
// then a whole stack end to end.
//
//     cargo run --release --example benchmark [SIDE] [FRAMES]

use std::time::Instant;

use stackalign::synth::{generate, SynthSpec};
use stackalign::{
    align_frame, align_stack, make_auto_config, oracle_argmin, AlignConfig, Levels,
    TemplatePyramid, TieBreak,
};

pub fn run_example(side: usize, frames: usize) -> stackalign::Result<()> {
    let spec = SynthSpec {
        rows: side,
        cols: side,
        frames,
        noise_sigma: 30.0,
        ..SynthSpec::default()
    };
    let (stack, _) = generate(&spec)?;
    let w = side / 3;
    let (a, b) = (&stack.frames()[frames / 2], &stack.frames()[0]);

    let config = AlignConfig::new(w, Levels::Fixed(0))?;
    let pyramid = TemplatePyramid::for_config(b, &config)?;
    let t0 = Instant::now();
    let fast = align_frame(a, &pyramid, &config)?;
    let fast_s = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let slow = oracle_argmin(a, b, w, TieBreak::LeastMotion)?;
    let slow_s = t0.elapsed().as_secs_f64();
    println!(
        "{side}x{side}, w={w}: fast {:.2} ms {:?}, exhaustive {:.1} ms {:?}, {:.0}x",
        fast_s * 1e3,
        fast.offset(),
        slow_s * 1e3,
        slow.offset(),
        slow_s / fast_s
    );

    let auto = make_auto_config(stack.dims())?;
    let t0 = Instant::now();
    align_stack(&stack, &auto, None)?;
    let total = t0.elapsed().as_secs_f64();
    println!(
        "{frames} frames end to end: {total:.2} s ({:.1} frames/s)",
        frames as f64 / total
    );
    Ok(())
}

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>());
    let side = args.next().and_then(|r| r.ok()).unwrap_or(256);
    let frames = args.next().and_then(|r| r.ok()).unwrap_or(100);
    if let Err(e) = run_example(side, frames) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
