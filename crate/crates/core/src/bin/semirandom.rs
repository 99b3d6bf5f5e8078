fn main() {
    std::process::exit(semirandom::harness::cli::main_with(std::env::args_os()));
}
