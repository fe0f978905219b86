fn main() {
    std::process::exit(pll_lockin::cli::main_entry());
}
