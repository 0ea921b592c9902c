fn main() {
    std::process::exit(graphtest::cli::main());
}
