fn main() {
    std::process::exit(photocool::cli::main());
}
