fn main() {
    std::process::exit(aniso_lab::cli::main_with_args(std::env::args_os()));
}
