fn main() {
    std::process::exit(guessbound::cli::run(std::env::args_os()));
}
