fn main() {
    std::process::exit(ssd_core::cli::run(std::env::args_os()));
}
