fn main() {
    let code = twistlab::cli::run(std::env::args_os());
    std::process::exit(code);
}
