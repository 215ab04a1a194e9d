fn main() {
    std::process::exit(holdout_cli::main_with_args(std::env::args_os()));
}
