fn main() {
    std::process::exit(textseg::cli::main_with_args(std::env::args_os()));
}
