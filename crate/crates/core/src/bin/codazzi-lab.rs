fn main() {
    std::process::exit(codazzi_lab::cli::main_with_args(std::env::args_os()));
}
