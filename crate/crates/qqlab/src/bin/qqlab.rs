fn main() {
    std::process::exit(qqlab::cli::run());
}
