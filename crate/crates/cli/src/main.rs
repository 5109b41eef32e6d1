fn main() {
    std::process::exit(meshpref_cli::run(std::env::args_os()));
}
