use clap::Parser;
use soundfield::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error[{}]: {err}", err.class());
        std::process::exit(err.exit_code());
    }
}
