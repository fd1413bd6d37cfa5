fn main() {
    std::process::exit(sphershift::cli::run(std::env::args_os()));
}
