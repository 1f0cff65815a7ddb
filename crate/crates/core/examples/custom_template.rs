// Aligning against an external template, with a progress callback and an
// explicit worker count.
//
//     cargo run --example custom_template

use std::sync::atomic::{AtomicUsize, Ordering};

use stackalign::synth::{generate, SynthSpec};
use stackalign::{align_stack, AlignConfig, Levels, TemplateSource};

pub fn run_example() -> stackalign::Result<()> {
    let spec = SynthSpec {
        rows: 96,
        cols: 96,
        frames: 30,
        noise_sigma: 80.0,
        seed: 11,
        ..SynthSpec::default()
    };
    let (stack, truth) = generate(&spec)?;

    // average the first five frames' content as a cleaner reference
    let first = stackalign::Stack::new(stack.frames()[..5].to_vec())?;
    let aligned_head = align_stack(&first, &AlignConfig::new(25, Levels::Fixed(1))?, None)?;
    let template = aligned_head.corrected.mean_frame();

    let config = AlignConfig::new(25, Levels::Auto)?
        .with_template(TemplateSource::External(template))
        .with_threads(Some(2));
    let calls = AtomicUsize::new(0);
    let progress = |done: usize, total: usize| {
        calls.fetch_add(1, Ordering::Relaxed);
        if done == total {
            println!("finished {done}/{total}");
        }
    };
    let result = align_stack(&stack, &config, Some(&progress))?;
    println!("progress called {} times", calls.load(Ordering::Relaxed));

    let exact = result
        .shifts
        .iter()
        .zip(&truth)
        .filter(|(found, moved)| found.offset() == moved.inverse().offset())
        .count();
    println!("{exact}/{} frames match the known motion", stack.len());
    let boundary = result.flags.iter().filter(|f| f.boundary).count();
    println!("{boundary} frame(s) at the edge of the search range");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
