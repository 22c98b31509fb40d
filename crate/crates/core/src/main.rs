fn main() {
    std::process::exit(binid::cli::main());
}
