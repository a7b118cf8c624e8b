fn main() -> std::process::ExitCode {
    hydrolimit::cli::main()
}
