fn main() {
    std::process::exit(script_balance::cli::run(std::env::args_os()));
}
