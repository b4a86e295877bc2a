fn main() {
    std::process::exit(carp::cli::main_entry());
}
