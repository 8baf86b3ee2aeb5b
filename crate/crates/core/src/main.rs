fn main() {
    dsq_core::cli::configure_threads();
    std::process::exit(dsq_core::cli::run_cli(std::env::args_os()));
}
