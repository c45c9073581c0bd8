use clap::Parser;
use grv_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = run(&cli, &mut stdout.lock()) {
        eprintln!("grv: {e}");
        std::process::exit(e.exit_code());
    }
}
