fn main() {
    std::process::exit(peakon_lab::cli::main_from_args(std::env::args_os()));
}
