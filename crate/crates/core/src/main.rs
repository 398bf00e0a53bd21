fn main() {
    std::process::exit(ringpot::cli::run(std::env::args_os()));
}
