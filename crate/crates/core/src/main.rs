fn main() {
    std::process::exit(goldbach_core::cli::run_cli(std::env::args_os()));
}
