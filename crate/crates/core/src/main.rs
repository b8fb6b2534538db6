fn main() {
    std::process::exit(medcon::cli::main_with_args(std::env::args_os()));
}
