use std::io::IsTerminal;
use std::process::ExitCode;

use clap::Parser;
use graspctl_gateway::cli::{cmd_metrics, cmd_replay, cmd_run, cmd_serve, Cli, Command};
use tracing_subscriber::EnvFilter;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let filter = EnvFilter::try_from_env("GRASPCTL_LOG").unwrap_or_else(|_| EnvFilter::new("info"));
    let ansi = std::io::stderr().is_terminal();
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).with_ansi(ansi).init();

    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // one line, innermost cause last
            let reason = e.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ");
            eprintln!("error: {}", reason.replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let (report, metrics) = cmd_run(&args)?;
            println!("{}", serde_json::to_string(&report)?);
            println!("{}", serde_json::to_string(&metrics)?);
        }
        Command::Replay(args) => {
            let r = cmd_replay(&args)?;
            println!(
                "ok: {} ticks, {} transitions, {} commands, 0 divergences",
                r.ticks,
                r.transitions.len(),
                r.commands.len()
            );
        }
        Command::Metrics(args) => {
            println!("{}", serde_json::to_string_pretty(&cmd_metrics(&args)?)?);
        }
        Command::Serve(args) => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(cmd_serve(&args))?;
        }
    }
    Ok(())
}
