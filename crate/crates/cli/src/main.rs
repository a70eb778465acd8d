fn main() {
    std::process::exit(trrip_cli::run(std::env::args_os()));
}
