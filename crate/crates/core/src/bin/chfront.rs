fn main() {
    std::process::exit(chfront::cli::run(std::env::args_os()));
}
