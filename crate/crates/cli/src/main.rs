fn main() {
    std::process::exit(docsift_cli::cli::main_with_args(std::env::args_os()));
}
