fn main() {
    std::process::exit(guardzone_cli::main_with_args(std::env::args_os()));
}
