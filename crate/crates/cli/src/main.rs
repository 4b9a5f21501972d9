fn main() {
    std::process::exit(samplebench_cli::run_cli(std::env::args_os()));
}
