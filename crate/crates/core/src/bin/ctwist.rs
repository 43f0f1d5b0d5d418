fn main() {
    std::process::exit(ctwist::cli::run(std::env::args_os()));
}
