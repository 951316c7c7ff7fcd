fn main() {
    std::process::exit(poleloc::cli::run(std::env::args_os()));
}
