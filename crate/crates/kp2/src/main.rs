use clap::Parser;

fn main() {
    let cli = kp2::cli::Cli::parse();
    if let Err(e) = kp2::cli::dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
