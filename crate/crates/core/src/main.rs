fn main() {
    std::process::exit(thermotob::cli::run(std::env::args_os()));
}
