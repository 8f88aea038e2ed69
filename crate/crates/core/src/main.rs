fn main() {
    std::process::exit(nuc_forge::cli::run(std::env::args_os()));
}
