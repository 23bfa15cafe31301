fn main() {
    std::process::exit(geomint::harness::run_cli(std::env::args_os()));
}
