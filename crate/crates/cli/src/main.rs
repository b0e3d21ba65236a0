fn main() {
    std::process::exit(chaosync_cli::run_cli(std::env::args_os()));
}
