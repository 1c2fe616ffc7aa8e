use std::process::ExitCode;

fn main() -> ExitCode {
    proxnet_cli::cli_main()
}
