use clap::Parser;
use girder_kit::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("girder-kit: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
