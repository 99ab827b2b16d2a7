fn main() {
    std::process::exit(mofuse::cli::run(std::env::args_os()));
}
