fn main() {
    std::process::exit(hal_loss::cli::run(std::env::args_os()));
}
