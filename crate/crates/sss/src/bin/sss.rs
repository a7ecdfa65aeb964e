fn main() {
    std::process::exit(sss::cli::run(std::env::args()));
}
