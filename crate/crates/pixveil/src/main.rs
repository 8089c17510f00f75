fn main() {
    std::process::exit(pixveil::cli::run(std::env::args().collect()))
}
