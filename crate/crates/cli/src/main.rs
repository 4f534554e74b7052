use clap::Parser;

use aquaforte_cli::commands::Cli;

fn main() {
    let code = match Cli::parse().run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}
