fn main() {
    std::process::exit(fbmc_mimo::cli::main_with_args(std::env::args_os()));
}
