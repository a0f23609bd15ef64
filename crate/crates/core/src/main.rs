fn main() {
    std::process::exit(netshift::cli::main_with_args(std::env::args_os()));
}
