fn main() {
    std::process::exit(stackalign::cli::cli_main(std::env::args_os()));
}
