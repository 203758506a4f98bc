fn main() {
    std::process::exit(lradi::cli::run(std::env::args_os()));
}
