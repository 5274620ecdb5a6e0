use clap::Parser;

fn main() {
    let cli = cfnorm::cli::Cli::parse();
    let mut out = std::io::stdout().lock();
    if let Err(err) = cfnorm::cli::run(cli, &mut out) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
