fn main() {
    std::process::exit(mdiqkd_cli::run(std::env::args_os()));
}
