fn main() {
    std::process::exit(cuttlefish_service::cli::main_exit_code());
}
