use std::process::ExitCode;

use clap::Parser;

use risfeed_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("risfeed: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
