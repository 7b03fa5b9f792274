fn main() {
    std::process::exit(qsv::cli::run(std::env::args_os()));
}
