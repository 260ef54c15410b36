fn main() {
    std::process::exit(bohmflow::cli::main());
}
