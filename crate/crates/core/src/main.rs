fn main() {
    std::process::exit(gqsd::cli::run(std::env::args_os()));
}
