fn main() {
    std::process::exit(desitter_cli::run(std::env::args_os()));
}
