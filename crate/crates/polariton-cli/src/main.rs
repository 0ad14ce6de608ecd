fn main() {
    std::process::exit(polariton_cli::main_with_args(std::env::args_os()));
}
