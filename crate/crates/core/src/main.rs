fn main() {
    std::process::exit(mbr_core::cli::run(std::env::args_os()));
}
