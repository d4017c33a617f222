//! Flat `key = value` config files, merged under the command-line flags.

use std::fs;

/// Reads `path` and turns each entry into `--key value` arguments. Blank
/// lines and lines starting with `#` are skipped; `key = true` becomes a
/// bare `--key`, `key = false` is dropped.
pub fn file_args(path: &str) -> Result<Vec<String>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("config {path}: {e}"))?;
    parse(&text).map_err(|e| format!("config {path}: {e}"))
}

pub fn parse(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected key = value", i + 1));
        };
        let k = k.trim().replace('_', "-");
        let v = v.trim().trim_matches('"');
        if k.is_empty() || k == "config" {
            return Err(format!("line {}: bad key {k:?}", i + 1));
        }
        match v {
            "true" => out.push(format!("--{k}")),
            "false" => {}
            _ => {
                out.push(format!("--{k}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

/// Splices the config file entries in right after the subcommand name so
/// explicit flags, which come later, override them. Returns `argv` unchanged
/// when no `--config` is given.
pub fn merge(argv: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = argv.get(i + 1).cloned();
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let Some(at) = argv.iter().skip(1).position(|a| subcommands.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let extra = file_args(&path)?;
    let mut out = argv[..at + 2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at + 2..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_entries() {
        let a = parse("# demo\nl1 = 6\n\na1=0.5\nsome_flag = true\noff = false\n").unwrap();
        assert_eq!(a, ["--l1", "6", "--a1", "0.5", "--some-flag"]);
        assert!(parse("nonsense").is_err());
    }
}
