// Writing and reading stacks as multi-page TIFF and as the raw container,
// plus the per-frame shift log.
//
//     cargo run --example stack_io

use stackalign::io::{
    load_stack, read_shift_log, save_stack, write_mean_image, write_shift_log, ShiftLog,
    StackFormat,
};
use stackalign::synth::{generate, SynthSpec};
use stackalign::{align_stack, make_auto_config, BitDepth};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let spec = SynthSpec {
        rows: 64,
        cols: 64,
        frames: 8,
        depth: BitDepth::U8,
        peak: 200.0,
        baseline: 20.0,
        seed: 3,
        trajectory: stackalign::synth::Trajectory::Walk {
            max_step: 2,
            max_extent: 6,
        },
        ..SynthSpec::default()
    };
    let (stack, _) = generate(&spec)?;

    for (name, format) in [
        ("stack.tif", StackFormat::Tiff),
        ("stack.raw", StackFormat::Raw),
    ] {
        let path = dir.path().join(name);
        save_stack(&stack, &path, format)?;
        let back = load_stack(&path)?;
        println!(
            "{name}: {} bytes, {} pages, {:?}, identical: {}",
            std::fs::metadata(&path)?.len(),
            back.len(),
            back.depth(),
            back.frames() == stack.frames()
        );
    }

    let result = align_stack(&stack, &make_auto_config(stack.dims())?, None)?;
    let csv = dir.path().join("shifts.csv");
    write_shift_log(&ShiftLog::from_result(&result), &csv)?;
    print!("{}", std::fs::read_to_string(&csv)?);
    assert_eq!(read_shift_log(&csv)?.shifts(), result.shifts);

    let mean = dir.path().join("mean.tif");
    write_mean_image(&result.corrected, &mean)?;
    println!("mean image: {:?}", load_stack(&mean)?.depth());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
