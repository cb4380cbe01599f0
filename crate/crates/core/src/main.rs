fn main() {
    std::process::exit(maskpost::cli::run_from(std::env::args_os()));
}
