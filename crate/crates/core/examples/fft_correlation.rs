// Cross term of the objective for every shift at once, from one padded FFT
// product, checked against the direct sum. Also shows that a larger
// transform size gives the same values.
//
//     cargo run --example fft_correlation

use stackalign::xcorr::{compute_corr_grid_with_dims, default_fft_dims};
use stackalign::{compute_corr_grid, direct_corr, BitDepth, Frame};

pub fn run_example() -> stackalign::Result<()> {
    let a = Frame::from_fn(37, 29, BitDepth::Float, |i, j| {
        ((i * 13 + j * 7) % 17) as f64
    })?;
    let b = Frame::from_fn(37, 29, BitDepth::Float, |i, j| {
        ((i * 5 + j * 11) % 19) as f64
    })?;
    let w = 9;

    let h = compute_corr_grid(&a, &b, w)?;
    println!(
        "padded to {:?} (default for {}x{}, w={w}: {:?})",
        h.fft_dims,
        a.rows(),
        a.cols(),
        default_fft_dims(a.rows(), a.cols(), w)
    );
    let mut worst = 0.0f64;
    for (s, t, v) in h.table.iter() {
        let d = direct_corr(&a, &b, s, t)?;
        worst = worst.max((v - d).abs() / d.abs().max(1.0));
    }
    println!(
        "{} lags, worst relative error {worst:.1e}",
        h.table.values().len()
    );

    let edge = w as isize - 1;
    println!(
        "corner lag ({edge},{edge}): fft {:.3}, direct {:.3}",
        h.table.get(edge, edge),
        direct_corr(&a, &b, edge, edge)?
    );

    let big = compute_corr_grid_with_dims(&a, &b, w, (64, 64))?;
    let drift = h
        .table
        .iter()
        .map(|(s, t, v)| (v - big.table.get(s, t)).abs())
        .fold(0.0, f64::max);
    println!("64x64 transform differs by at most {drift:.1e}");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
