//! Flat `key = value` files that supply defaults for command-line flags.

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Command};

use crate::CliError;

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; keys may use `-` or `_`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value, got {line:?}", i + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        entries.push((key, value.trim().to_owned()));
    }
    Ok(entries)
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse(&text)
}

/// Appends a `--key value` pair for every config entry whose flag was not
/// given on the command line or through the environment, so explicit flags
/// win. Keys must name a flag of the chosen subcommand or a global flag.
pub fn merge(
    cmd: &Command,
    matches: &ArgMatches,
    mut args: Vec<OsString>,
    entries: &[(String, String)],
) -> Result<Vec<OsString>, CliError> {
    let Some((name, sub_matches)) = matches.subcommand() else {
        return Ok(args);
    };
    let sub = cmd.find_subcommand(name).expect("matched subcommand exists");
    for (key, value) in entries {
        if key == "config" {
            return Err(CliError::Usage("config files cannot include other config files".into()));
        }
        let (arg, scope) = match sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) {
            Some(a) => (a, sub_matches),
            None => match cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())) {
                Some(a) => (a, matches),
                None => return Err(CliError::Usage(format!("unknown config key {key:?} for `{name}`"))),
            },
        };
        let explicit = matches!(
            scope.value_source(arg.get_id().as_str()),
            Some(ValueSource::CommandLine | ValueSource::EnvVariable)
        );
        if explicit {
            continue;
        }
        let flag = OsString::from(format!("--{key}"));
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "yes" | "1" => args.push(flag),
                "false" | "no" | "0" => {}
                other => return Err(CliError::Usage(format!("config key {key}: expected true or false, got {other:?}"))),
            },
            _ => {
                args.push(flag);
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let entries = parse("# manifest\nreps = 20\n\nmax_resamples=5000\n").unwrap();
        assert_eq!(
            entries,
            vec![("reps".into(), "20".into()), ("max-resamples".into(), "5000".into())]
        );
        assert!(parse("reps 20").is_err());
        assert!(parse(" = 3").is_err());
    }
}
