fn main() {
    std::process::exit(gamma_bsde::run(std::env::args_os()));
}
