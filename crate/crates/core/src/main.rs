fn main() {
    std::process::exit(netbt::cli::main_with_args(std::env::args_os()));
}
