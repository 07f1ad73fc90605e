fn main() {
    std::process::exit(decaylab::cli::run_cli(std::env::args_os()));
}
