fn main() {
    std::process::exit(dptol::cli::main_with_args(std::env::args_os()));
}
