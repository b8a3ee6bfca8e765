fn main() {
    std::process::exit(soundscape_service::cli::run(std::env::args_os()));
}
