fn main() {
    std::process::exit(sfoliate_cli::run(std::env::args_os()));
}
