fn main() {
    std::process::exit(dynid::cli::main_with_args(std::env::args_os()));
}
