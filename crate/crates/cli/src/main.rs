fn main() {
    std::process::exit(mrc_cli::run(std::env::args_os()));
}
