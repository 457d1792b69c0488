fn main() {
    std::process::exit(ia_workbench::cli::run(std::env::args().skip(1)));
}
