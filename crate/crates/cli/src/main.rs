mod args;
mod commands;
mod error;
mod manifest;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{merge_config, read_config, Cli, Command, ReplayArgs};
use commands::{
    resolve_asymptotic, resolve_fidelity, resolve_protocol, run_asymptotic, run_fidelity,
    run_manifest, run_protocol, Outcome,
};
use error::{CliError, CliResult};
use manifest::{strip_output_suffix, RunManifest, TOOL_VERSION};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn report(outcome: &Outcome) {
    for line in &outcome.summary {
        println!("{line}");
    }
    for path in &outcome.outputs {
        println!("wrote {}", path.display());
    }
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    let config = cli.config.as_deref().map(read_config).transpose()?;
    let config_jobs = config
        .as_ref()
        .and_then(|c| c.get("jobs"))
        .map(|v| {
            v.as_u64()
                .map(|j| j as usize)
                .ok_or_else(|| CliError::Format("config `jobs` must be a positive integer".into()))
        })
        .transpose()?;
    if let Some(jobs) = cli.jobs.or(config_jobs) {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }

    match cli.command {
        Command::Fidelity(a) => {
            let (params, prefix) = resolve_fidelity(merge_config(a, config.as_ref())?)?;
            report(&run_fidelity(&params, &prefix)?);
        }
        Command::Asymptotic(a) => {
            let (params, prefix) = resolve_asymptotic(merge_config(a, config.as_ref())?)?;
            report(&run_asymptotic(&params, &prefix)?);
        }
        Command::Protocol(a) => {
            let (params, prefix) = resolve_protocol(merge_config(a, config.as_ref())?)?;
            report(&run_protocol(&params, &prefix)?);
        }
        Command::Verify(a) => {
            let (params, prefix) = verify::resolve_verify(merge_config(a, config.as_ref())?);
            let (outcome, result) = verify::run_verify(&params, &prefix)?;
            report(&outcome);
            if !result.passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Replay(a) => replay(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn replay(a: ReplayArgs) -> CliResult<()> {
    let manifest = RunManifest::read(&a.file)?;
    if manifest.version != TOOL_VERSION {
        eprintln!(
            "warning: {} was written by version {}, replaying with {TOOL_VERSION}",
            a.file.display(),
            manifest.version
        );
    }
    if !a.check {
        let prefix = strip_output_suffix(a.out.as_deref().unwrap_or(&a.file));
        report(&run_manifest(&manifest, &prefix)?);
        return Ok(());
    }

    let dir = tempfile::tempdir().map_err(|e| CliError::io(std::env::temp_dir(), e))?;
    let name = a.file.file_name().unwrap_or_default();
    let prefix = strip_output_suffix(&dir.path().join(name));
    let outcome = run_manifest(&manifest, &prefix)?;
    let regenerated = outcome
        .outputs
        .iter()
        .find(|p| p.file_name() == Some(name))
        .ok_or_else(|| {
            CliError::Format(format!("replay did not produce {}", name.to_string_lossy()))
        })?;
    let original = std::fs::read_to_string(&a.file).map_err(|e| CliError::io(&a.file, e))?;
    let fresh = std::fs::read_to_string(regenerated).map_err(|e| CliError::io(regenerated, e))?;
    let same = manifest::same_content(&a.file, &original, &fresh)?;
    if same {
        println!("{}: replay matches", a.file.display());
        Ok(())
    } else {
        Err(CliError::Mismatch(format!(
            "{}: replay differs from the recorded output",
            a.file.display()
        )))
    }
}
