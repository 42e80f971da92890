fn main() {
    std::process::exit(tepcomp::cli::main_with_args(std::env::args_os()));
}
