fn main() {
    std::process::exit(specfocus::cli::run(std::env::args()));
}
