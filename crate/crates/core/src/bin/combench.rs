use clap::Parser;

fn main() {
    let cli = combench::cli::Cli::parse();
    if let Err(err) = combench::cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
