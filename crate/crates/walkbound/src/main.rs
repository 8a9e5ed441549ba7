fn main() {
    std::process::exit(walkbound::cli::run_from_args());
}
