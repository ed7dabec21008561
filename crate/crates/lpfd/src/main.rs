fn main() {
    std::process::exit(lpfd::cli::run(std::env::args_os()));
}
