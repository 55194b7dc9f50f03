fn main() {
    std::process::exit(proxkl_cli::run_cli(std::env::args_os()));
}
