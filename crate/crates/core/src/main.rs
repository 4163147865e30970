fn main() {
    std::process::exit(edgemetric::cli::run(std::env::args_os()));
}
