fn main() {
    std::process::exit(dprmp::cli::main_with_args(std::env::args_os()));
}
