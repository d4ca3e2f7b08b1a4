fn main() {
    let code = omtx::cli::run_command(std::env::args_os());
    std::process::exit(code);
}
