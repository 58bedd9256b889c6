fn main() {
    std::process::exit(lmm_discover::cli::run());
}
