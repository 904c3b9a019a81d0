fn main() {
    std::process::exit(bellkit::cli::main_with_args(std::env::args_os()));
}
