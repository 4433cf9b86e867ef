fn main() {
    std::process::exit(kse_core::cli::main_entry(std::env::args_os()));
}
