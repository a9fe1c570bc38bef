use clap::Parser;

use substep_cli::{run, Cli, Command};
use substep_service::{serve, Service};

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Command::Serve { listen, logics, step_limit } = &cli.command {
        let mut service = Service::load(logics.as_deref())?;
        service.step_limit_cap = *step_limit;
        let rt = tokio::runtime::Runtime::new()?;
        return rt.block_on(async {
            let listener = tokio::net::TcpListener::bind(listen).await?;
            eprintln!("listening on {}", listener.local_addr()?);
            serve(listener, service).await?;
            Ok(())
        });
    }
    let code = run(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
