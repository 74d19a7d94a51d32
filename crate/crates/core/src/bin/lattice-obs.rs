fn main() {
    std::process::exit(lattice_obs::cli::main_with_args(std::env::args_os()));
}
