//! `key=value` config files. A key applies to every subcommand that has a
//! flag of that name; `subcommand.key` restricts it to one subcommand.
//! Entries are spliced in ahead of the command-line flags, so flags win.

use std::ffi::OsString;
use std::path::Path;

use clap::Command;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub scope: Option<String>,
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> std::result::Result<Vec<Entry>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
        let k = k.trim().replace('_', "-");
        let (scope, key) = match k.split_once('.') {
            Some((s, k)) => (Some(s.to_string()), k.to_string()),
            None => (None, k),
        };
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.push(Entry { scope, key, value: v.trim().to_string(), line: i + 1 });
    }
    Ok(out)
}

/// Finds `--config <path>` ahead of the subcommand name and the subcommand
/// itself. Returns the argv with the config flag removed.
pub fn split_config(args: &[OsString]) -> (Vec<OsString>, Option<OsString>, Option<usize>) {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut sub_at = None;
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        let s = a.to_string_lossy();
        if i == 0 || sub_at.is_some() {
            rest.push(a.clone());
        } else if s == "--config" {
            config = args.get(i + 1).cloned();
            i += 1;
        } else if let Some(v) = s.strip_prefix("--config=") {
            config = Some(v.into());
        } else {
            if !s.starts_with('-') {
                sub_at = Some(rest.len());
            }
            rest.push(a.clone());
        }
        i += 1;
    }
    (rest, config, sub_at)
}

fn takes_value(cmd: &Command, key: &str) -> Option<bool> {
    cmd.get_arguments()
        .find(|a| a.get_long() == Some(key))
        .map(|a| a.get_action().takes_values())
}

/// Expands config entries into flags for `sub`.
pub fn flags_for(entries: &[Entry], root: &Command, sub: &str, path: &Path) -> Result<Vec<OsString>> {
    let cmd = root
        .find_subcommand(sub)
        .ok_or_else(|| CliError::Usage(format!("unknown subcommand {sub}")))?;
    let mut out = Vec::new();
    for e in entries {
        let at = || format!("{}:{}", path.display(), e.line);
        if let Some(scope) = &e.scope {
            if root.find_subcommand(scope).is_none() {
                return Err(CliError::Usage(format!("{}: unknown subcommand {scope}", at())));
            }
            if scope != sub {
                continue;
            }
        }
        match takes_value(cmd, &e.key) {
            Some(true) => {
                out.push(format!("--{}", e.key).into());
                out.push(e.value.clone().into());
            }
            Some(false) => match e.value.as_str() {
                "true" | "1" | "yes" => out.push(format!("--{}", e.key).into()),
                "false" | "0" | "no" => {}
                other => return Err(CliError::Usage(format!("{}: {} expects true or false, got {other}", at(), e.key))),
            },
            None if e.scope.is_some() => {
                return Err(CliError::Usage(format!("{}: {sub} has no option --{}", at(), e.key)));
            }
            None => {
                let known = root.get_subcommands().any(|c| takes_value(c, &e.key).is_some());
                if !known {
                    return Err(CliError::Usage(format!("{}: no subcommand has an option --{}", at(), e.key)));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scoped_and_plain_keys() {
        let e = parse("# c\nseed = 4\ncluster.top_m=12\n\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].scope.as_deref(), e[0].key.as_str(), e[0].value.as_str()), (None, "seed", "4"));
        assert_eq!((e[1].scope.as_deref(), e[1].key.as_str()), (Some("cluster"), "top-m"));
        assert!(parse("novalue").is_err());
    }

    #[test]
    fn config_flag_is_lifted_out() {
        let args: Vec<OsString> = ["vidcue", "--config", "a.cfg", "stats", "--config", "x"].iter().map(Into::into).collect();
        let (rest, cfg, sub) = split_config(&args);
        assert_eq!(cfg, Some("a.cfg".into()));
        assert_eq!(sub, Some(1));
        assert_eq!(rest, ["vidcue", "stats", "--config", "x"].map(OsString::from));
    }
}
