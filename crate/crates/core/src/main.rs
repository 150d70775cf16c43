fn main() {
    std::process::exit(bcdp::harness::cli::run(std::env::args_os()));
}
