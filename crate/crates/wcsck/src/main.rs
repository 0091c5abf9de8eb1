use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wcsck::{parse_scenario, run, ExitStatus, HarnessError, SavedState, Task};

/// Weighted cscK numerical laboratory on toric CP1.
#[derive(Debug, Parser)]
#[command(name = "wcsck", version)]
struct Cli {
    task: Task,
    /// TOML scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (default `wcsck-out/<task>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random probes, overriding the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Resume a march from a `last_state.json` of an earlier run.
    #[arg(long)]
    resume: Option<PathBuf>,
}

fn exit(status: ExitStatus) -> ExitCode {
    ExitCode::from(status as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit(ExitStatus::ConfigError) } else { exit(ExitStatus::Pass) };
        }
    };
    let config = || -> wcsck::Result<_> {
        let text = fs::read_to_string(&cli.scenario).map_err(|e| HarnessError::Validation(format!("{}: {e}", cli.scenario.display())))?;
        let mut scenario = parse_scenario(&text)?;
        scenario.apply_overrides(std::env::vars())?;
        scenario.validate()?;
        if let Some(seed) = cli.seed {
            scenario.seed = seed;
        }
        if let Some(declared) = scenario.task {
            if declared != cli.task {
                return Err(HarnessError::Validation(format!("scenario declares task {declared}, command line asks for {}", cli.task)));
            }
        }
        let resume = match &cli.resume {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?;
                Some(serde_json::from_str::<SavedState>(&text).map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))?)
            }
            None => None,
        };
        Ok((scenario, resume))
    };
    let (scenario, resume) = match config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("wcsck: {e}");
            return exit(e.exit_status());
        }
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("wcsck-out").join(cli.task.name()));
    match run(&scenario, cli.task, &out, resume.as_ref()) {
        Ok(record) => {
            for c in &record.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if let Some(e) = &record.error {
                println!("ERROR {e}");
            }
            println!("{} {} -> {}", cli.task, if record.passed { "passed" } else { "failed" }, out.display());
            exit(if record.passed { ExitStatus::Pass } else { ExitStatus::NumericFailure })
        }
        Err(e) => {
            eprintln!("wcsck: {e}");
            exit(e.exit_status())
        }
    }
}
