fn main() {
    let code = qsvlab::cli::main_with_args(std::env::args().collect());
    std::process::exit(code);
}
