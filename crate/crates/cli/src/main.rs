use clap::Parser;

fn main() {
    let cli = srblab_cli::Cli::parse();
    if let Err(e) = srblab_cli::run(cli) {
        eprintln!("srblab: {e}");
        std::process::exit(e.exit_code());
    }
}
