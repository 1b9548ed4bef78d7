fn main() {
    std::process::exit(blocktri::cli::run(std::env::args_os()));
}
