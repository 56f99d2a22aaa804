fn main() {
    std::process::exit(bochner::cli::run(std::env::args_os()));
}
