fn main() {
    std::process::exit(openanc::cli::run());
}
