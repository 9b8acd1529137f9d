fn main() {
    std::process::exit(fedenv_cli::run(std::env::args_os()));
}
