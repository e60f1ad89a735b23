fn main() {
    std::process::exit(angleguard_cli::run(std::env::args_os()));
}
