fn main() {
    std::process::exit(vofrac_cli::run(std::env::args_os()));
}
