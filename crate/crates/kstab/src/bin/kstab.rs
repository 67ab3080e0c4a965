fn main() {
    std::process::exit(kstab::cli::main_with(std::env::args_os()));
}
