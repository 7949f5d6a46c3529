fn main() {
    std::process::exit(ballfield::cli::run(std::env::args_os()));
}
