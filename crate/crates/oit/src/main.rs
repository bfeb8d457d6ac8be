fn main() {
    std::process::exit(oit::cli::run(std::env::args()));
}
