fn main() {
    std::process::exit(lowertail::cli::main_with(std::env::args_os()));
}
