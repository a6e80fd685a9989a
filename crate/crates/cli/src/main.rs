fn main() {
    std::process::exit(ldplab_cli::main_with_args(std::env::args_os()));
}
