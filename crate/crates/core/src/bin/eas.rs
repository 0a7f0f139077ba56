fn main() {
    std::process::exit(eas_core::cli::run(std::env::args_os()));
}
