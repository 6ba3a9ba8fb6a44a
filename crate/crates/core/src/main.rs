fn main() {
    std::process::exit(shiftwell::cli::main_with_args(std::env::args_os()));
}
