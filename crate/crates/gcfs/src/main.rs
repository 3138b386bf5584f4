fn main() {
    std::process::exit(gcfs::cli::run(std::env::args_os()));
}
