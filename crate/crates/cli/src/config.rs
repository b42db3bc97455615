//! `--config FILE`: flat `key = value` lines whose keys are the flag names.
//! File values are spliced in front of the command line flags, so flags win.

use std::fs;

use crate::error::CliError;

const COMMANDS: [&str; 3] = ["evaluate", "optimize", "figure"];

/// Parses a config file body into `--key value` pairs.
pub fn config_args(text: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.starts_with('-') || key == "config" {
            return Err(CliError::Config(format!("config line {}: bad key {key:?}", i + 1)));
        }
        out.push(format!("--{key}"));
        out.push(value.to_owned());
    }
    Ok(out)
}

/// Removes `--config PATH` from `args` and splices the file's flags in
/// right after the subcommand name.
pub fn expand(mut args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::Config("--config needs a path".into()));
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_owned());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("cannot read config {path}: {e}")))?;
    let extra = config_args(&text)?;
    let at = args
        .iter()
        .position(|a| COMMANDS.contains(&a.as_str()))
        .map_or(args.len(), |k| k + 1);
    args.splice(at..at, extra);
    Ok(args)
}
