fn main() {
    std::process::exit(penwalk_cli::run(std::env::args_os().collect()));
}
