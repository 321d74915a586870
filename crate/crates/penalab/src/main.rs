fn main() {
    std::process::exit(penalab::cli::run(std::env::args_os()));
}
