fn main() {
    std::process::exit(dipolejet::cli::main_with_args(std::env::args_os()));
}
