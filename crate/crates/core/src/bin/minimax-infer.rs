fn main() {
    std::process::exit(minimax_infer::cli::main_with_args(std::env::args_os()));
}
