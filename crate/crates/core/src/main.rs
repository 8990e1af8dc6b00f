fn main() {
    std::process::exit(secondorder::cli::main_with_args(std::env::args().collect()));
}
