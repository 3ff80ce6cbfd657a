fn main() {
    std::process::exit(dmf::cli::run_cli());
}
