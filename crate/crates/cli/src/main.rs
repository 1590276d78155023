fn main() {
    std::process::exit(diffharness_cli::run(std::env::args_os()));
}
