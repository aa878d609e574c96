fn main() {
    std::process::exit(rfp_core::cli::run_cli(std::env::args_os()));
}
