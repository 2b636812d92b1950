fn main() {
    std::process::exit(graphzero::cli::main_with_args(std::env::args_os()));
}
