fn main() -> std::process::ExitCode {
    wordsync::cli::main()
}
