fn main() -> std::process::ExitCode {
    propscan_server::cli::main()
}
