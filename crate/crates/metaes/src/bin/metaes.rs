fn main() -> std::process::ExitCode {
    metaes::cli::main()
}
