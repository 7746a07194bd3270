fn main() {
    let code = p2h_sched::cli::run_command(std::env::args_os());
    std::process::exit(code);
}
