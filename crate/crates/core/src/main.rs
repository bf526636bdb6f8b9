fn main() {
    std::process::exit(qillum::cli::main_entry());
}
