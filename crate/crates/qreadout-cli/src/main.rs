fn main() {
    std::process::exit(qreadout_cli::run(std::env::args_os()));
}
