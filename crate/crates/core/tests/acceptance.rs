//! End-to-end acceptance checks. Run with
//! `cargo test --release --test acceptance` (the test profile is already
//! optimized); one PASS/FAIL line is printed per check.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;
use stackalign::io::{load_stack, save_stack, StackFormat};
use stackalign::synth::{generate, render_scene, score_recovery, SynthSpec};
use stackalign::xcorr::compute_corr_grid_with_dims;
use stackalign::{
    align_frame, align_stack, build_prefix_tables, compute_corr_grid, direct_corr,
    make_auto_config, oracle_argmin, score_grid, score_oracle, AlignConfig, BitDepth, Frame,
    Levels, Shift, Stack, TemplatePyramid, TieBreak,
};

type Outcome = std::result::Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn noise_free_spec() -> SynthSpec {
    SynthSpec {
        seed: 2024,
        ..SynthSpec::default()
    }
}

/// Same scene and drift, plus Gaussian noise at 5% of the scene's dynamic range.
fn noisy_spec() -> SynthSpec {
    let base = noise_free_spec();
    let scene = render_scene(&base).unwrap();
    let (lo, hi) = scene
        .pixels()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    SynthSpec {
        noise_sigma: 0.05 * (hi - lo),
        ..base
    }
}

fn oracle_scores() -> Outcome {
    let mut r = common::rng(101);
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut entries = 0usize;
    for case in 0..200 {
        let m = r.random_range(8..=32);
        let n = r.random_range(8..=32);
        let w = r.random_range(2..=m.min(n) / 2);
        let (a, b) = if case % 2 == 0 {
            (
                common::int_frame(&mut r, m, n, 4095),
                common::int_frame(&mut r, m, n, 4095),
            )
        } else {
            let a = Frame::from_fn(m, n, BitDepth::Float, |_, _| r.random_range(0.0..1.0)).unwrap();
            let b = Frame::from_fn(m, n, BitDepth::Float, |_, _| r.random_range(0.0..1.0)).unwrap();
            (a, b)
        };
        let grid = score_grid(&a, &b, w).unwrap();
        for (s, t, v) in grid.table.iter() {
            let o = score_oracle(&a, &b, s, t).unwrap();
            worst = worst.max((v - o).abs() / o.abs());
            entries += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(
        worst <= 1e-9 && secs < 30.0,
        format!("{entries} entries, worst rel err {worst:.2e}, {secs:.2} s"),
    )
}

fn prefix_exactness() -> Outcome {
    let mut r = common::rng(102);
    let mut checked = 0usize;
    for m in 1..=12 {
        for n in 1..=12 {
            let a = common::int_frame(&mut r, m, n, 1000);
            let b = common::int_frame(&mut r, m, n, 1000);
            for w in 1..=m.min(n) {
                let tables = build_prefix_tables(&a, &b, w).unwrap();
                for (s, t, v) in tables.sq_a.iter() {
                    let expect = common::direct_sq(&a, &b, s, t);
                    if (v, tables.sq_b.get(s, t)) != expect {
                        return Err(format!("{m}x{n} w={w} ({s},{t}): {v} vs {expect:?}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} entries exact over all quadrants"))
}

fn fft_correlation() -> Outcome {
    let mut r = common::rng(103);
    let mut worst = 0.0f64;
    let mut worst_pad = 0.0f64;
    for _ in 0..100 {
        let m = r.random_range(4..=40);
        let n = r.random_range(4..=40);
        let w = r.random_range(1..=m.min(n) - 1);
        let a = common::int_frame(&mut r, m, n, 255);
        let b = common::int_frame(&mut r, m, n, 255);
        let h = compute_corr_grid(&a, &b, w).unwrap();
        let edge = w as isize - 1;
        let mut corners = 0;
        for (s, t, v) in h.table.iter() {
            let d = direct_corr(&a, &b, s, t).unwrap();
            worst = worst.max((v - d).abs() / d.abs().max(1.0));
            corners += usize::from(s.abs() == edge && t.abs() == edge);
        }
        assert_eq!(corners, if w == 1 { 1 } else { 4 });
        let big = (m + w + r.random_range(0..20), n + w + r.random_range(0..20));
        let padded = compute_corr_grid_with_dims(&a, &b, w, big).unwrap();
        let tight = compute_corr_grid_with_dims(&a, &b, w, (m + w, n + w)).unwrap();
        for (s, t, v) in padded.table.iter() {
            let u = tight.table.get(s, t);
            worst_pad = worst_pad.max((v - u).abs() / u.abs().max(1.0));
        }
    }
    ensure(
        worst <= 1e-8 && worst_pad <= 1e-8,
        format!("worst rel err {worst:.2e}, padding drift {worst_pad:.2e}"),
    )
}

fn noise_free_recovery() -> Outcome {
    let spec = noise_free_spec();
    let (stack, truth) = generate(&spec).unwrap();
    let extent = truth.iter().map(|s| s.max_abs()).max().unwrap();
    let cfg = make_auto_config(stack.dims()).unwrap();
    let res = align_stack(&stack, &cfg, None).unwrap();
    let rep = score_recovery(&res.shifts, &truth).unwrap();
    ensure(
        rep.exact_rate == 1.0,
        format!(
            "{}x{}x{}, drift up to {extent}, w={}: exact {:.1}%",
            spec.rows,
            spec.cols,
            spec.frames,
            cfg.max_shift,
            100.0 * rep.exact_rate
        ),
    )
}

fn noisy_recovery() -> Outcome {
    let spec = noisy_spec();
    let (stack, truth) = generate(&spec).unwrap();
    let cfg = make_auto_config(stack.dims()).unwrap();
    let res = align_stack(&stack, &cfg, None).unwrap();
    let rep = score_recovery(&res.shifts, &truth).unwrap();
    ensure(
        rep.exact_rate >= 0.95 && rep.max_error <= 1,
        format!(
            "sigma {:.1}: exact {:.1}%, max error {} px",
            spec.noise_sigma,
            100.0 * rep.exact_rate,
            rep.max_error
        ),
    )
}

fn mean_image_sharpens() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (name, spec) in [("noise-free", noise_free_spec()), ("noisy", noisy_spec())] {
        let (stack, _) = generate(&spec).unwrap();
        let cfg = make_auto_config(stack.dims()).unwrap();
        let res = align_stack(&stack, &cfg, None).unwrap();
        let before = stack.mean_frame().variance();
        let after = res.corrected.mean_frame().variance();
        let ratio = after / before;
        ok &= ratio >= 1.2;
        details.push(format!("{name} variance ratio {ratio:.2}"));
    }
    ensure(ok, details.join(", "))
}

fn min_time(reps: usize, mut f: impl FnMut()) -> Duration {
    (0..reps)
        .map(|_| {
            let t0 = Instant::now();
            f();
            t0.elapsed()
        })
        .min()
        .unwrap()
}

fn speedup_over_exhaustive() -> Outcome {
    let spec = SynthSpec {
        rows: 256,
        cols: 256,
        frames: 100,
        noise_sigma: 30.0,
        ..noise_free_spec()
    };
    let (stack, _) = generate(&spec).unwrap();
    let (a, b) = (&stack.frames()[37], &stack.frames()[0]);
    let cfg = AlignConfig::new(85, Levels::Fixed(0))
        .unwrap()
        .with_threads(Some(1));
    let pyr = TemplatePyramid::for_config(b, &cfg).unwrap();
    let mut fast = Shift::zero();
    let fast_t = min_time(3, || fast = align_frame(a, &pyr, &cfg).unwrap());
    let mut slow = Shift::zero();
    let slow_t = min_time(1, || {
        slow = oracle_argmin(a, b, 85, TieBreak::LeastMotion).unwrap()
    });
    let speedup = slow_t.as_secs_f64() / fast_t.as_secs_f64();

    let auto = make_auto_config(stack.dims()).unwrap();
    let t0 = Instant::now();
    align_stack(&stack, &auto, None).unwrap();
    let whole = t0.elapsed().as_secs_f64();
    ensure(
        speedup >= 10.0 && fast.offset() == slow.offset(),
        format!(
            "256x256 w=85: fast {:.1} ms, exhaustive {:.0} ms, speedup {speedup:.0}x; \
             256x256x100 end-to-end {whole:.2} s (reported only)",
            fast_t.as_secs_f64() * 1e3,
            slow_t.as_secs_f64() * 1e3
        ),
    )
}

fn scaling() -> Outcome {
    let stack_of = |rows: usize, frames: usize| {
        let spec = SynthSpec {
            rows,
            cols: rows,
            frames,
            noise_sigma: 20.0,
            ..noise_free_spec()
        };
        generate(&spec).unwrap().0
    };
    // interleave the runs so load changes hit every size alike; keep the best of each
    let time_stacks = |stacks: &[&Stack]| {
        let mut best = vec![f64::INFINITY; stacks.len()];
        for _ in 0..5 {
            for (k, stack) in stacks.iter().enumerate() {
                let cfg = make_auto_config(stack.dims())
                    .unwrap()
                    .with_threads(Some(1));
                let t0 = Instant::now();
                align_stack(stack, &cfg, None).unwrap();
                best[k] = best[k].min(t0.elapsed().as_secs_f64());
            }
        }
        best
    };
    let short = stack_of(128, 60);
    let long = stack_of(128, 120);
    let big = stack_of(256, 60);
    let t = time_stacks(&[&short, &long, &big]);
    let ratio_t = t[1] / t[0];
    let ratio_px = t[2] / t[0];
    ensure(
        (1.5..=2.5).contains(&ratio_t) && ratio_px <= 6.0,
        format!("2x frames -> {ratio_t:.2}x time; 2x side -> {ratio_px:.2}x time"),
    )
}

fn determinism() -> Outcome {
    let (stack, _) = generate(&noisy_spec()).unwrap();
    let cfg = make_auto_config(stack.dims()).unwrap();
    let runs: Vec<Vec<(isize, isize, u64)>> = [Some(1), Some(4), Some(4), Some(1)]
        .into_iter()
        .map(|threads| {
            align_stack(&stack, &cfg.clone().with_threads(threads), None)
                .unwrap()
                .shifts
                .iter()
                .map(|s| (s.s, s.t, s.score.to_bits()))
                .collect()
        })
        .collect();
    ensure(
        runs.windows(2).all(|w| w[0] == w[1]),
        "threads 1, 4, 4, 1: shifts and scores bit-identical".into(),
    )
}

fn pyramid_consistency() -> Outcome {
    let (stack, _) = generate(&noisy_spec()).unwrap();
    let w = make_auto_config(stack.dims()).unwrap().max_shift;
    let flat = align_stack(
        &stack,
        &AlignConfig::new(w, Levels::Fixed(0)).unwrap(),
        None,
    )
    .unwrap();
    let one = align_stack(
        &stack,
        &AlignConfig::new(w, Levels::Fixed(1)).unwrap(),
        None,
    )
    .unwrap();
    let close = flat
        .shifts
        .iter()
        .zip(&one.shifts)
        .filter(|(x, y)| x.chebyshev(y) <= 1)
        .count();
    let rate = close as f64 / stack.len() as f64;
    ensure(
        rate >= 0.95,
        format!("{:.1}% of frames within 1 px", 100.0 * rate),
    )
}

fn io_round_trip() -> Outcome {
    let mut r = common::rng(111);
    let dir = tempfile::tempdir().unwrap();
    let mut count = 0;
    for depth in [BitDepth::U8, BitDepth::U16] {
        for (ext, format) in [("tif", StackFormat::Tiff), ("raw", StackFormat::Raw)] {
            for k in 0..5 {
                let (m, n) = (r.random_range(1..70), r.random_range(1..70));
                let t = r.random_range(1..8);
                let stack = common::int_stack(&mut r, m, n, t, depth);
                let path = dir.path().join(format!("s{k}.{ext}"));
                save_stack(&stack, &path, format).unwrap();
                let back = load_stack(&path).unwrap();
                if back.frames() != stack.frames() || back.depth() != depth {
                    return Err(format!("{depth:?} {ext} {m}x{n} differs after reload"));
                }
                count += 1;
            }
        }
    }
    Ok(format!(
        "{count} stacks pixel-identical (8/16-bit, tif/raw)"
    ))
}

#[test]
fn acceptance() {
    let checks: [Check; 11] = [
        ("fast score grid matches direct scoring", oracle_scores),
        ("prefix tables exact", prefix_exactness),
        ("FFT cross term matches direct sum", fft_correlation),
        ("noise-free recovery", noise_free_recovery),
        ("noisy recovery", noisy_recovery),
        ("mean image sharpens", mean_image_sharpens),
        ("speedup over exhaustive search", speedup_over_exhaustive),
        ("time scaling", scaling),
        ("determinism across thread counts", determinism),
        ("pyramid consistency", pyramid_consistency),
        ("stack I/O round trip", io_round_trip),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout();
    for (k, (name, check)) in checks.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        // bypass the harness capture so the summary lands in the log
        let _ = writeln!(stdout, "{tag} [{:>2}] {name}: {detail}", k + 1);
        if outcome.is_err() {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed checks: {failed:?}");
}
