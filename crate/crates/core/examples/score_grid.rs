// The per-shift objective: mean squared difference over the overlap of the
// shifted frame and the template. Prints the grid around the optimum and
// checks a few entries against direct summation.
//
//     cargo run --example score_grid

use stackalign::{apply_shift, score_grid, score_oracle, BitDepth, Frame, Shift, TieBreak};

pub fn run_example() -> stackalign::Result<()> {
    let template = Frame::from_fn(24, 20, BitDepth::Float, |i, j| {
        let (x, y) = (i as f64 - 11.0, j as f64 - 8.0);
        100.0 * (-(x * x + y * y) / 18.0).exp() + ((i * 3 + j * 7) % 5) as f64
    })?;
    let frame = apply_shift(&template, &Shift::new(-2, 3, 0.0));

    let w = 5;
    let grid = score_grid(&frame, &template, w)?;
    println!("scores for |s|, |t| <= {}:", w - 1);
    let r = w as isize - 1;
    for s in -r..=r {
        let row: Vec<String> = (-r..=r)
            .map(|t| format!("{:8.1}", grid.get(s, t)))
            .collect();
        println!("s={s:>2} {}", row.join(""));
    }
    let best = grid.argmin(TieBreak::LeastMotion);
    println!("best shift {:?}", best.offset());

    for (s, t) in [(0, 0), (2, -3), (-4, 4)] {
        let direct = score_oracle(&frame, &template, s, t)?;
        println!(
            "({s:>2},{t:>2}) grid {:.6} direct {direct:.6}",
            grid.get(s, t)
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
