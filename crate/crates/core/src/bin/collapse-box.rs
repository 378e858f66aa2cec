fn main() -> std::process::ExitCode {
    collapse_box::cli::run()
}
