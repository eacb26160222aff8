fn main() {
    std::process::exit(obsent::cli::main_with_args(std::env::args_os()))
}
