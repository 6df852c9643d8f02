fn main() {
    std::process::exit(metarca::cli::run(std::env::args_os()));
}
