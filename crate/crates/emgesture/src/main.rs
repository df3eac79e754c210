use clap::Parser;

fn main() {
    let cli = emgesture::cli::Cli::parse();
    if let Err(err) = emgesture::cli::run(cli) {
        let code = err.exit_code();
        eprintln!("error[{code}]: {err}");
        std::process::exit(code);
    }
}
