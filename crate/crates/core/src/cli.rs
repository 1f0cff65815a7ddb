//! Command-line front end: `align`, `synth` and `bench`.
//!
//! Exit codes: 0 success, 1 some frames failed to align (outputs are still
//! written), 2 invalid input or usage.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::align::{align_stack, coarse_align, downsample, AlignmentResult};
use crate::config::{make_auto_config, AlignConfig, Levels, TemplateSource, MAX_DOWNSAMPLE_LEVELS};
use crate::error::{Error, Result};
use crate::frame::Stack;
use crate::io::{load_stack, save_stack, write_mean_image, write_shift_log, ShiftLog, StackFormat};
use crate::overlap::oracle_argmin;
use crate::synth::{generate, score_recovery, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FRAME_FAILURES: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "stackalign",
    version,
    about = "Translation-only motion correction for image stacks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Align every frame of a stack to a template and write the corrected stack.
    Align(AlignArgs),
    /// Generate a synthetic drifting stack with known shifts.
    Synth(SynthArgs),
    /// Time alignment and compare against exhaustive direct search.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Auto<T> {
    Auto,
    Value(T),
}

fn parse_count(s: &str) -> std::result::Result<Auto<usize>, String> {
    if s == "auto" {
        return Ok(Auto::Auto);
    }
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("expected a positive integer or `auto`, got `{s}`")),
        Ok(v) => Ok(Auto::Value(v)),
    }
}

fn parse_levels(s: &str) -> std::result::Result<Auto<usize>, String> {
    if s == "auto" {
        return Ok(Auto::Auto);
    }
    let v: usize = s
        .parse()
        .map_err(|_| format!("expected 0, 1, 2 or `auto`, got `{s}`"))?;
    if v > MAX_DOWNSAMPLE_LEVELS {
        return Err(format!(
            "{v} downsampling levels requested; at most {MAX_DOWNSAMPLE_LEVELS} are allowed \
             (3 or more levels cause severe alignment errors)"
        ));
    }
    Ok(Auto::Value(v))
}

#[derive(Debug, Args)]
struct AlignOpts {
    /// Largest |shift| searched is N-1; `auto` uses min(rows, cols)/3.
    #[arg(long, value_name = "N|auto", default_value = "auto", value_parser = parse_count)]
    max_shift: Auto<usize>,
    /// Number of 2x downsamplings before the exhaustive search.
    #[arg(long, value_name = "0|1|2|auto", default_value = "auto", value_parser = parse_levels)]
    levels: Auto<usize>,
    #[arg(long, value_name = "N|auto", default_value = "auto", value_parser = parse_count)]
    threads: Auto<usize>,
}

#[derive(Debug, Args)]
struct AlignArgs {
    #[arg(long)]
    input: PathBuf,
    /// Corrected stack; format from the extension (.tif or .raw).
    #[arg(long)]
    output: PathBuf,
    /// Use frame N of the input as the template (default 0).
    #[arg(long, value_name = "N", conflicts_with = "template_file")]
    template_index: Option<usize>,
    /// Use the first page of this file as the template.
    #[arg(long, value_name = "PATH")]
    template_file: Option<PathBuf>,
    #[command(flatten)]
    opts: AlignOpts,
    #[arg(long, value_name = "PATH")]
    shifts_csv: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    mean_before: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    mean_after: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Flat key = value spec file.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_name = "PATH")]
    truth_csv: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["input", "synth_spec"])))]
struct BenchArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    synth_spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[command(flatten)]
    opts: AlignOpts,
}

/// Runs the CLI on `args` (including the program name), writing to the process streams.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// As [`cli_main`] with explicit output and diagnostic streams.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_INVALID,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Align(a) => cmd_align(a, err),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Bench(a) => cmd_bench(a, out, err),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

fn build_config(dims: (usize, usize), opts: &AlignOpts) -> Result<AlignConfig> {
    let mut cfg = make_auto_config(dims)?;
    if let Auto::Value(w) = opts.max_shift {
        cfg.max_shift = w;
    }
    cfg.levels = match opts.levels {
        Auto::Auto => Levels::Auto,
        Auto::Value(l) => Levels::Fixed(l),
    };
    cfg.threads = match opts.threads {
        Auto::Auto => None,
        Auto::Value(n) => Some(n),
    };
    cfg.validate_for(dims)?;
    Ok(cfg)
}

fn run_alignment(
    stack: &Stack,
    cfg: &AlignConfig,
    err: &mut (dyn Write + Send),
) -> Result<AlignmentResult> {
    let last_pct = Mutex::new(usize::MAX);
    let err = Mutex::new(err);
    let sink = |done: usize, total: usize| {
        let pct = done * 100 / total;
        let mut last = last_pct.lock().unwrap();
        if *last != pct || done == total {
            *last = pct;
            let mut e = err.lock().unwrap();
            let _ = write!(e, "\raligned {done}/{total} frames ({pct}%)");
            if done == total {
                let _ = writeln!(e);
            }
        }
    };
    align_stack(stack, cfg, Some(&sink))
}

fn cmd_align(args: AlignArgs, err: &mut (dyn Write + Send)) -> Result<i32> {
    let out_format = StackFormat::from_path(&args.output)?;
    let stack = load_stack(&args.input)?;
    let mut cfg = build_config(stack.dims(), &args.opts)?;
    cfg.template = match (&args.template_index, &args.template_file) {
        (_, Some(p)) => {
            let t = load_stack(p)?;
            TemplateSource::External(t.frames()[0].clone())
        }
        (Some(k), None) => TemplateSource::Index(*k),
        (None, None) => TemplateSource::Index(0),
    };
    cfg.validate_for(stack.dims())?;
    let _ = writeln!(
        err,
        "{} frames of {}x{}, max shift {}, {} downsampling level(s)",
        stack.len(),
        stack.dims().0,
        stack.dims().1,
        cfg.max_shift,
        cfg.resolved_levels(stack.dims())
    );

    let result = run_alignment(&stack, &cfg, err)?;
    save_stack(&result.corrected, &args.output, out_format)?;
    if let Some(p) = &args.shifts_csv {
        write_shift_log(&ShiftLog::from_result(&result), p)?;
    }
    if let Some(p) = &args.mean_before {
        write_mean_image(&stack, p)?;
    }
    if let Some(p) = &args.mean_after {
        write_mean_image(&result.corrected, p)?;
    }
    let failed = result.failed_frames();
    if failed > 0 {
        let _ = writeln!(
            err,
            "{failed} frame(s) failed to align and were left unshifted"
        );
        return Ok(EXIT_FRAME_FAILURES);
    }
    Ok(EXIT_OK)
}

fn cmd_synth(args: SynthArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = SynthSpec::load(&args.spec)?;
    let (stack, truth) = generate(&spec)?;
    save_stack(&stack, &args.output, StackFormat::from_path(&args.output)?)?;
    write_shift_log(&ShiftLog::from_shifts(&truth, None), &args.truth_csv)?;
    let _ = writeln!(
        out,
        "wrote {} frames of {}x{} to {}",
        stack.len(),
        spec.rows,
        spec.cols,
        args.output.display()
    );
    Ok(EXIT_OK)
}

fn cmd_bench(args: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if args.repeat == 0 {
        return Err(Error::Config("--repeat must be at least 1".into()));
    }
    let (stack, truth) = match (&args.input, &args.synth_spec) {
        (Some(p), _) => (load_stack(p)?, None),
        (None, Some(p)) => {
            let (s, t) = generate(&SynthSpec::load(p)?)?;
            (s, Some(t))
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let cfg = build_config(stack.dims(), &args.opts)?;
    let (m, n) = stack.dims();
    let levels = cfg.resolved_levels((m, n));
    let _ = writeln!(
        out,
        "stack: {} frames of {m}x{n}; max shift {}; levels {levels}",
        stack.len(),
        cfg.max_shift
    );

    let mut best = f64::INFINITY;
    let mut last = None;
    for run in 0..args.repeat {
        let t0 = Instant::now();
        let res = align_stack(&stack, &cfg, None)?;
        let secs = t0.elapsed().as_secs_f64();
        best = best.min(secs);
        let _ = writeln!(
            out,
            "run {}: total {:.3} s, {:.3} ms/frame",
            run + 1,
            secs,
            1e3 * secs / stack.len() as f64
        );
        last = Some(res);
    }
    let _ = writeln!(
        out,
        "best: {:.3} s ({:.1} frames/s)",
        best,
        stack.len() as f64 / best
    );

    // Fast vs exhaustive search on one frame, at the resolution the exhaustive
    // search actually runs.
    let k = stack.len() / 2;
    let template = match &cfg.template {
        TemplateSource::Index(i) => stack.frames()[*i].clone(),
        TemplateSource::External(f) => f.clone(),
    };
    let mut a = stack.frames()[k].clone();
    let mut b = template;
    for _ in 0..levels {
        a = downsample(&a)?;
        b = downsample(&b)?;
    }
    let w = crate::config::level_bound(cfg.max_shift, levels);
    let t0 = Instant::now();
    let fast = coarse_align(&a, &b, w)?;
    let fast_s = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let slow = oracle_argmin(&a, &b, w, cfg.tie_break)?;
    let slow_s = t0.elapsed().as_secs_f64();
    let _ =
        writeln!(
        out,
        "frame {k} search at {}x{}, w={w}: fast {:.3} ms, exhaustive {:.3} ms, speedup {:.1}x, {}",
        a.rows(),
        a.cols(),
        fast_s * 1e3,
        slow_s * 1e3,
        slow_s / fast_s,
        if fast.offset() == slow.offset() { "same shift" } else { "SHIFTS DIFFER" }
    );

    if let (Some(truth), Some(res)) = (truth, last) {
        let rep = score_recovery(&res.shifts, &truth)?;
        let _ = writeln!(
            out,
            "recovery: exact {:.1}%, max error {} px",
            100.0 * rep.exact_rate,
            rep.max_error
        );
    }
    let _ = err.flush();
    Ok(EXIT_OK)
}
