//! `--config file.json`: a JSON object whose keys mirror the long flags of
//! the chosen subcommand. Its flags are spliced in right after the
//! subcommand, so explicit command-line flags override them.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

pub fn expand(args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(args);
    };
    let mut args = args;
    let path = if let Some(v) = args[pos].strip_prefix("--config=") {
        let v = v.to_string();
        args.remove(pos);
        v
    } else {
        if pos + 1 >= args.len() {
            bail!("--config needs a file path");
        }
        let v = args.remove(pos + 1);
        args.remove(pos);
        v
    };
    let flags = flags_from_file(Path::new(&path))?;
    // argv[0] is the program, argv[1] the subcommand
    let at = 2.min(args.len());
    args.splice(at..at, flags);
    Ok(args)
}

fn flags_from_file(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(map) = value else {
        bail!("config must be a JSON object");
    };
    let mut out = Vec::new();
    for (key, v) in &map {
        if key == "dist" {
            if let Value::Object(_) = v {
                out.extend(dist_flags(v)?);
                continue;
            }
        }
        push_flag(&mut out, key, v)?;
    }
    Ok(out)
}

fn push_flag(out: &mut Vec<String>, key: &str, v: &Value) -> Result<()> {
    let flag = format!("--{}", key.replace('_', "-"));
    match v {
        Value::Bool(true) => out.push(flag),
        Value::Bool(false) | Value::Null => {}
        Value::Number(n) => out.extend([flag, n.to_string()]),
        Value::String(s) => out.extend([flag, s.clone()]),
        Value::Array(items) => {
            let parts: Vec<String> = items
                .iter()
                .map(|i| match i {
                    Value::Number(n) => Ok(n.to_string()),
                    Value::String(s) => Ok(s.clone()),
                    _ => bail!("config key {key:?}: arrays hold numbers or strings"),
                })
                .collect::<Result<_>>()?;
            out.extend([flag, parts.join(",")]);
        }
        Value::Object(_) => bail!("config key {key:?}: nested objects are only allowed for dist"),
    }
    Ok(())
}

/// `{"kind": ..., "params": {...}, "support": [a, b]}`.
fn dist_flags(v: &Value) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .context("dist.kind must be a string")?;
    out.extend(["--dist".to_string(), kind.to_string()]);
    if let Some(support) = v.get("support") {
        let pair = support
            .as_array()
            .filter(|a| a.len() == 2)
            .context("dist.support must be [a, b]")?;
        push_flag(&mut out, "a", &pair[0])?;
        push_flag(&mut out, "b", &pair[1])?;
    }
    if let Some(params) = v.get("params") {
        let params = params
            .as_object()
            .context("dist.params must be an object")?;
        for (k, pv) in params {
            let flag = match (kind, k.as_str()) {
                ("truncated-normal", "mean") => "tn-mean",
                ("truncated-normal", "std") => "tn-std",
                ("beta-scaled", "alpha") => "beta-alpha",
                ("beta-scaled", "beta") => "beta-beta",
                _ => bail!("dist.params: unknown parameter {k:?} for {kind}"),
            };
            push_flag(&mut out, flag, pv)?;
        }
    }
    for key in v.as_object().into_iter().flat_map(|m| m.keys()) {
        if !matches!(key.as_str(), "kind" | "params" | "support") {
            bail!("dist: unknown key {key:?}");
        }
    }
    Ok(out)
}
