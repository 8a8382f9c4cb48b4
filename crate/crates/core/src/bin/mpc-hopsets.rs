fn main() {
    std::process::exit(mpc_hopsets::cli::run(std::env::args_os()));
}
