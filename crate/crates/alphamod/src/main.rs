fn main() {
    std::process::exit(alphamod::cli::main_with_args(std::env::args_os()));
}
