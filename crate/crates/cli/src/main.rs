fn main() {
    std::process::exit(tedopa_cli::cli::main_with_args(std::env::args_os()));
}
