fn main() {
    std::process::exit(scatter_teleport::cli::run(std::env::args_os()));
}
