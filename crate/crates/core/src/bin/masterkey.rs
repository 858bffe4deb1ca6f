fn main() {
    std::process::exit(masterkey::cli::run(std::env::args_os()));
}
