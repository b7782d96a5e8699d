fn main() {
    std::process::exit(cpm_audit::cli::run(std::env::args_os()));
}
