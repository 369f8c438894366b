fn main() {
    std::process::exit(depmatch::cli::run(std::env::args_os()));
}
