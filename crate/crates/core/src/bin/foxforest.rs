fn main() {
    std::process::exit(foxforest::cli::run(std::env::args_os()));
}
