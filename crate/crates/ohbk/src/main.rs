fn main() {
    std::process::exit(ohbk::cli::main_entry());
}
