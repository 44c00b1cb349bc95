fn main() {
    std::process::exit(encctl::cli::run_from_args(std::env::args_os()));
}
