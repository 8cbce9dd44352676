fn main() {
    std::process::exit(recourse_mi::cli::run(std::env::args_os()));
}
