fn main() {
    std::process::exit(quadmargin_cli::run(std::env::args_os()));
}
