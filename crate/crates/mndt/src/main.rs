fn main() {
    std::process::exit(mndt::cli::run_from(std::env::args_os()));
}
