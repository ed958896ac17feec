fn main() {
    std::process::exit(triage::cli::run(std::env::args_os()));
}
