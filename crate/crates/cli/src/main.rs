fn main() {
    std::process::exit(lanchester_cli::main_with_args(std::env::args_os()));
}
