fn main() {
    std::process::exit(mps_rg::run(std::env::args_os()));
}
