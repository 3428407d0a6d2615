//! Flat `key = value` config files merged into argv ahead of the flags.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

pub struct ConfigLine {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse_config(text: &str, path: &Path) -> Result<Vec<ConfigLine>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected `key = value`, got {line:?}", path.display(), i + 1))?;
        let key = key.trim().trim_start_matches("--").to_string();
        if key.is_empty() {
            return Err(format!("{}:{}: empty key", path.display(), i + 1));
        }
        out.push(ConfigLine { line: i + 1, key, value: value.trim().to_string() });
    }
    Ok(out)
}

/// Removes `--config FILE` from `argv` and splices the file's settings in
/// right after the subcommand, so that explicit flags (parsed later) win.
pub fn expand(argv: Vec<OsString>, cli: &Command) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    let prog = it.next().unwrap_or_else(|| "penwalk".into());
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let v = it.next().ok_or("--config needs a file")?;
            config = Some(std::path::PathBuf::from(v));
        } else if let Some(v) = s.strip_prefix("--config=") {
            config = Some(v.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        let mut out = vec![prog];
        out.extend(rest);
        return Ok(out);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let lines = parse_config(&text, &path)?;

    let from_argv = rest.first().map(|a| a.to_string_lossy().into_owned()).filter(|a| !a.starts_with('-'));
    let from_file = lines.iter().find(|l| l.key == "command");
    let name = match (&from_argv, from_file) {
        (Some(a), Some(f)) if *a != f.value => {
            return Err(format!("{}:{}: command {:?} conflicts with subcommand {a:?}", path.display(), f.line, f.value))
        }
        (Some(a), _) => a.clone(),
        (None, Some(f)) => f.value.clone(),
        (None, None) => {
            return Err(format!("{}: no subcommand given on the command line or as `command`", path.display()))
        }
    };
    let sub = cli.find_subcommand(&name).ok_or_else(|| format!("{}: unknown subcommand {name:?}", path.display()))?;
    let user: Vec<OsString> = if from_argv.is_some() { rest[1..].to_vec() } else { rest };

    let mut spliced: Vec<OsString> = Vec::new();
    let mut positional: Vec<OsString> = Vec::new();
    for l in lines.iter().filter(|l| l.key != "command") {
        let arg = sub
            .get_arguments()
            .chain(cli.get_arguments().filter(|a| a.is_global_set()))
            .find(|a| a.get_id().as_str() == l.key || a.get_long() == Some(l.key.as_str()))
            .ok_or_else(|| format!("{}:{}: unknown key {:?} for `{name}`", path.display(), l.line, l.key))?;
        match (arg.get_long(), arg.get_action()) {
            (None, _) => positional.push(l.value.clone().into()),
            (Some(long), ArgAction::SetTrue) => match l.value.as_str() {
                "true" | "yes" | "1" => spliced.push(format!("--{long}").into()),
                "false" | "no" | "0" => {}
                v => {
                    return Err(format!("{}:{}: {:?} expects true or false, got {v:?}", path.display(), l.line, l.key))
                }
            },
            (Some(long), _) => {
                spliced.push(format!("--{long}").into());
                spliced.push(l.value.clone().into());
            }
        }
    }
    if has_positional(&user, sub, cli) {
        positional.clear();
    }

    let mut out = vec![prog, name.into()];
    out.extend(positional);
    out.extend(spliced);
    out.extend(user);
    Ok(out)
}

fn has_positional(args: &[OsString], sub: &Command, cli: &Command) -> bool {
    let mut i = 0;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if let Some(long) = s.strip_prefix("--") {
            if !long.contains('=') {
                let takes = sub
                    .get_arguments()
                    .chain(cli.get_arguments())
                    .find(|a| a.get_long() == Some(long))
                    .is_some_and(|a| a.get_action().takes_values());
                if takes {
                    i += 1;
                }
            }
        } else if !s.starts_with('-') {
            return true;
        }
        i += 1;
    }
    false
}
