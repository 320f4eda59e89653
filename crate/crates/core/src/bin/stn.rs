fn main() {
    std::process::exit(stn::cli::run(std::env::args_os()));
}
