use std::process::ExitCode;

fn main() -> ExitCode {
    match energy_games::cli::run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kasi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
