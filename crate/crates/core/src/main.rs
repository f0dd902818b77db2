fn main() {
    std::process::exit(weylfold::cli::run(std::env::args_os()));
}
