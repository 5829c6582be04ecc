fn main() {
    std::process::exit(mfsde::cli::run(std::env::args_os()));
}
