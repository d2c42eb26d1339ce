fn main() {
    std::process::exit(levelset_cli::run_cli(std::env::args().collect()))
}
