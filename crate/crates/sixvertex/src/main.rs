fn main() {
    std::process::exit(sixvertex::cli::run(std::env::args_os()));
}
