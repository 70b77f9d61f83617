fn main() {
    std::process::exit(nonlocal_heat::cli::run());
}
