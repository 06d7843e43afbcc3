use clap::Parser;

fn main() {
    let cli = prl_cli::Cli::parse();
    if let Err(e) = prl_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
