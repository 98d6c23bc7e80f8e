use clap::Parser;
use privacy_pricing_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("ppricing: {e}");
        std::process::exit(e.exit_code());
    }
}
