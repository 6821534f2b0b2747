fn main() {
    std::process::exit(spvp::cli::main_with_args(std::env::args_os()));
}
