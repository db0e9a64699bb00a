fn main() {
    std::process::exit(cubelab::cli::run_from(std::env::args_os()));
}
