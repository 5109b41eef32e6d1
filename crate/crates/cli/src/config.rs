//! `key = value` config files whose keys mirror long flag names.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

/// Parses a config file into `--key value` pairs, in file order.
///
/// Blank lines and lines starting with `#` are skipped. `true` and `false`
/// values expand to a bare flag or nothing.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<OsString>, CliError> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("{}:{}: expected key = value", origin.display(), i + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::config(format!("{}:{}: invalid key `{key}`", origin.display(), i + 1)));
        }
        let value = value.trim().trim_matches('"');
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

/// Splices the contents of `--config <file>` in front of the other flags so
/// that explicit flags take precedence. The option must follow the
/// subcommand.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(pos) = argv
        .iter()
        .position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="))
    else {
        return Ok(argv);
    };
    let flag = argv[pos].to_string_lossy().into_owned();
    let (path, consumed) = match flag.strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => match argv.get(pos + 1) {
            Some(p) => (p.to_string_lossy().into_owned(), 2),
            None => return Err(CliError::config("--config needs a file")),
        },
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let injected = parse_config(&text, path)?;

    let mut rest: Vec<OsString> = argv[..pos].to_vec();
    rest.extend(argv[pos + consumed..].iter().cloned());
    // binary name and subcommand stay in front
    let head = rest.len().min(2);
    let mut out: Vec<OsString> = rest[..head].to_vec();
    out.extend(injected);
    out.extend(rest[head..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_and_booleans() {
        let args = parse_config(
            "# comment\nseed = 7\nout_dir=\"ladder\"\nverbose = true\nquiet = false\n",
            Path::new("c"),
        )
        .unwrap();
        let args: Vec<String> = args.into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(args, ["--seed", "7", "--out-dir", "ladder", "--verbose"]);
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(parse_config("seed 7", Path::new("c")).is_err());
    }

    #[test]
    fn explicit_flags_follow_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sim.conf");
        std::fs::write(&path, "seed = 1\n").unwrap();
        let argv: Vec<OsString> = ["meshpref", "simulate", "--config", path.to_str().unwrap(), "--seed", "2"]
            .iter()
            .map(OsString::from)
            .collect();
        let out: Vec<String> = expand_config(argv).unwrap().into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(out, ["meshpref", "simulate", "--seed", "1", "--seed", "2"]);
    }
}
