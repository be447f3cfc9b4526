fn main() {
    std::process::exit(wirerecon_cli::run(std::env::args_os()));
}
