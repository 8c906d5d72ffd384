fn main() {
    std::process::exit(stream_locator::cli::main_with_args(std::env::args_os()));
}
