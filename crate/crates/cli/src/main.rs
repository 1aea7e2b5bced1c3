fn main() {
    std::process::exit(squeezesim_cli::main_with_args(std::env::args()));
}
