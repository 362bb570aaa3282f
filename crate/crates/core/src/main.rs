fn main() {
    std::process::exit(comono::bench::run_cli(std::env::args_os()));
}
