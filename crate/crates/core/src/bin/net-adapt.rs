fn main() {
    net_adapt::cli::init_threads();
    std::process::exit(net_adapt::cli::main_with_args(std::env::args_os()));
}
