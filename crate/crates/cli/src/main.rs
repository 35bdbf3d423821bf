mod cli;
mod commands;
mod config;
mod context;
mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{CommandFactory, FromArgMatches};

use crate::cli::{Cli, Command};
use crate::context::{RunContext, MANIFEST_FILE};
use crate::error::{CliError, Result};

fn parse_args(args: Vec<OsString>) -> std::result::Result<Cli, i32> {
    let (mut argv, config_path, sub_at) = config::split_config(&args);
    let mut root = Cli::command();
    let names: Vec<String> = root.get_subcommands().map(|c| c.get_name().to_string()).collect();
    for n in &names {
        root = root.mut_subcommand(n, |c| c.args_override_self(true));
    }
    if let (Some(path), Some(at)) = (config_path, sub_at) {
        let path = PathBuf::from(path);
        let inserted = std::fs::read_to_string(&path)
            .map_err(|e| CliError::io(&path, e))
            .and_then(|t| config::parse(&t).map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))))
            .and_then(|entries| {
                let sub = argv[at].to_string_lossy().into_owned();
                config::flags_for(&entries, &root, &sub, &path)
            });
        match inserted {
            Ok(flags) => {
                argv.splice(at + 1..at + 1, flags);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return Err(e.exit_code());
            }
        }
    }
    let matches = match root.try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return Err(if e.use_stderr() { 2 } else { 0 });
        }
    };
    Cli::from_arg_matches(&matches).map_err(|e| {
        let _ = e.print();
        2
    })
}

fn dispatch(ctx: &mut RunContext, cmd: &Command) -> Result<Option<vidcue_service::AppState>> {
    use commands::*;
    match cmd {
        Command::Cluster(a) => pipeline::cluster(ctx, a)?,
        Command::Keywords(a) => pipeline::keywords(ctx, a)?,
        Command::SamplePrompts(a) => pipeline::sample_prompts(ctx, a)?,
        Command::ChunkFilter(a) => pipeline::chunk_filter(ctx, a)?,
        Command::Validate(a) => annotations::validate(ctx, a)?,
        Command::Parse(a) => traces::parse(ctx, a)?,
        Command::DistillPrep(a) => annotations::distill_prep(ctx, a)?,
        Command::TrainToy(a) => train::train_toy_cmd(ctx, a)?,
        Command::Score(a) => score::score(ctx, a)?,
        Command::Stats(a) => annotations::stats(ctx, a)?,
        Command::Serve(a) => return serve::prepare(ctx, a).map(Some),
    }
    Ok(None)
}

fn run(cli: Cli) -> Result<i32> {
    let mut ctx = RunContext::default();
    let state = dispatch(&mut ctx, &cli.command)?;
    let findings = ctx.findings;
    let config = serde_json::to_value(&cli.command).map_err(|e| CliError::Internal(e.to_string()))?;
    let (manifest, stdout, notes) = ctx.finish(cli.command.name(), cli.command.seed(), config)?;

    let mut err = std::io::stderr().lock();
    for n in &notes {
        let _ = writeln!(err, "{n}");
    }
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
    let target = cli.manifest.clone().or_else(|| cli.command.out_dir().map(|d| d.join(MANIFEST_FILE)));
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            std::fs::write(&path, json).map_err(|e| CliError::io(&path, e))?;
        }
        None => {
            let compact = serde_json::to_string(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
            let _ = writeln!(err, "manifest: {compact}");
        }
    }
    drop(err);
    std::io::stdout().write_all(stdout.as_bytes()).map_err(|e| CliError::io(&PathBuf::from("<stdout>"), e))?;

    if let (Some(state), Command::Serve(a)) = (state, &cli.command) {
        commands::serve::run(state, &a.bind)?;
    }
    Ok(if findings > 0 { 1 } else { 0 })
}

fn main() {
    let cli = match parse_args(std::env::args_os().collect()) {
        Ok(c) => c,
        Err(code) => std::process::exit(code),
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
