fn main() {
    std::process::exit(fatreat::cli::run_from_args(std::env::args_os()));
}
