fn main() {
    std::process::exit(corisk::cli::run());
}
