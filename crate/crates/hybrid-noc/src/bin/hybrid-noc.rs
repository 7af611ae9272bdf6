fn main() {
    std::process::exit(hybrid_noc::cli::run(std::env::args_os()));
}
