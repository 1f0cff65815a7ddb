macro_rules! example {
    ($name:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(align_synthetic, "align_synthetic.rs");
example!(score_grid, "score_grid.rs");
example!(fft_correlation, "fft_correlation.rs");
example!(pyramid_refinement, "pyramid_refinement.rs");
example!(stack_io, "stack_io.rs");
example!(custom_template, "custom_template.rs");
example!(benchmark, "benchmark.rs");

#[test]
fn align_synthetic_runs() {
    align_synthetic::run_example().unwrap();
}

#[test]
fn score_grid_runs() {
    score_grid::run_example().unwrap();
}

#[test]
fn fft_correlation_runs() {
    fft_correlation::run_example().unwrap();
}

#[test]
fn pyramid_refinement_runs() {
    pyramid_refinement::run_example().unwrap();
}

#[test]
fn stack_io_runs() {
    stack_io::run_example().unwrap();
}

#[test]
fn custom_template_runs() {
    custom_template::run_example().unwrap();
}

#[test]
fn benchmark_runs_small() {
    benchmark::run_example(64, 6).unwrap();
}
