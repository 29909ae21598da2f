use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use longarm_core::Result;
use serde_json::{json, Map, Value};

use crate::RunArgs;

pub fn tool_info() -> Value {
    json!({
        "name": "longarm",
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": env!("LONGARM_GIT_DESCRIBE"),
    })
}

fn meta_path(run: &RunArgs, output: Option<&Path>) -> Option<PathBuf> {
    run.meta.clone().or_else(|| {
        output.map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(".meta.json");
            PathBuf::from(s)
        })
    })
}

/// Writes `body` to the output file (or stdout) and the metadata sidecar.
pub fn emit(command: &str, body: &str, meta: Map<String, Value>, run: &RunArgs, started: Instant, fallback: Option<&str>) -> Result<()> {
    let output = run.output.clone().or_else(|| fallback.map(PathBuf::from));
    match &output {
        Some(path) => std::fs::write(path, body)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()?;
        }
    }
    if let Some(path) = meta_path(run, output.as_deref()) {
        let mut full = Map::new();
        full.insert("tool".into(), tool_info());
        full.insert("command".into(), command.into());
        full.insert("wall_time_s".into(), started.elapsed().as_secs_f64().into());
        full.extend(meta);
        let mut text = serde_json::to_string_pretty(&Value::Object(full))?;
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(())
}

pub fn json_body<T: serde::Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}
