// Generate a drifting synthetic stack, align it with the automatic
// settings, and compare the recovered shifts with the known motion.
//
//     cargo run --example align_synthetic

use stackalign::synth::{generate, score_recovery, SynthSpec};
use stackalign::{align_stack, make_auto_config};

pub fn run_example() -> stackalign::Result<()> {
    let spec = SynthSpec {
        frames: 24,
        noise_sigma: 60.0,
        seed: 7,
        ..SynthSpec::default()
    };
    let (stack, truth) = generate(&spec)?;
    let config = make_auto_config(stack.dims())?;
    println!(
        "{} frames of {}x{}, max shift {}",
        stack.len(),
        spec.rows,
        spec.cols,
        config.max_shift
    );

    let result = align_stack(&stack, &config, None)?;
    for (k, (found, moved)) in result.shifts.iter().zip(&truth).enumerate().take(6) {
        println!(
            "frame {k:>2}: moved by {:?}, recovered {:?} (score {:.1})",
            moved.offset(),
            found.offset(),
            found.score
        );
    }
    let report = score_recovery(&result.shifts, &truth)?;
    println!(
        "exact on {:.0}% of frames, worst error {} px",
        100.0 * report.exact_rate,
        report.max_error
    );
    let before = stack.mean_frame().variance();
    let after = result.corrected.mean_frame().variance();
    println!("mean-image variance {before:.0} -> {after:.0}");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
