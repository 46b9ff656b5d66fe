//! Flat `key = value` config files, spliced into the argument list ahead of the user's flags
//! so that explicit flags win.

use std::fs;
use std::path::Path;

/// Reads `path` and renders each entry as flag tokens. `true` renders as a bare switch,
/// `false` is dropped. Blank lines and `#` comments are ignored.
pub fn config_tokens(path: &Path) -> Result<Vec<String>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(format!("line {}: empty key", n + 1));
        }
        if key == "config" {
            return Err(format!("line {}: config files cannot include other config files", n + 1));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

/// Inserts the tokens of any `--config FILE` right after the subcommand name.
pub fn expand(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            path = args.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let tokens = config_tokens(Path::new(&path))?;
    let mut out = args;
    let at = 2.min(out.len());
    out.splice(at..at, tokens);
    Ok(out)
}
