fn main() {
    std::process::exit(curlforce::cli::main_with_args(std::env::args_os()));
}
