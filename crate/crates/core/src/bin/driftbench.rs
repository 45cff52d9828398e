fn main() {
    std::process::exit(driftbench::cli::run());
}
