fn main() {
    std::process::exit(cgauss_cli::dispatch(std::env::args_os()));
}
