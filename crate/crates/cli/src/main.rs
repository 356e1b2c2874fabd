use clap::Parser;

fn main() {
    let cli = ggc_cbi_cli::Cli::parse();
    match ggc_cbi_cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            std::process::exit(failure.code);
        }
    }
}
