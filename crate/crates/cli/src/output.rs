//! Report envelope and file emission.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

use hslab_core::report::{fmt_float, to_json};

use crate::config::{Format, RunConfig};

#[derive(Serialize)]
pub struct Report<'a, R: Serialize> {
    pub config: &'a RunConfig,
    pub grid: Option<Value>,
    pub tolerance: Option<f64>,
    pub target: Option<Value>,
    pub result: R,
}

#[derive(Default)]
pub struct Artifacts {
    pub csv: Option<String>,
    pub svg: Option<String>,
    /// Extra CSV files written next to the report, by file stem.
    pub extra_csv: Vec<(String, String)>,
}

/// Writes `<stem>.json|csv|svg` into the output directory and prints the JSON to stdout.
pub fn emit<R: Serialize>(cfg: &RunConfig, stem: &str, report: &Report<'_, R>, art: Artifacts) -> std::io::Result<Vec<PathBuf>> {
    let json = to_json(report);
    print!("{json}");
    fs::create_dir_all(&cfg.out)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: &str| -> std::io::Result<()> {
        let path = cfg.out.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    if cfg.wants(Format::Json) {
        put(format!("{stem}.json"), &json)?;
    }
    if cfg.wants(Format::Csv) {
        if let Some(csv) = &art.csv {
            put(format!("{stem}.csv"), csv)?;
        }
        for (name, body) in &art.extra_csv {
            put(format!("{name}.csv"), body)?;
        }
    }
    if cfg.wants(Format::Svg) {
        if let Some(svg) = &art.svg {
            put(format!("{stem}.svg"), svg)?;
        }
    }
    Ok(written)
}

/// `key,value` rows for every scalar leaf of a JSON value, keys joined with '.'.
pub fn flat_csv(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        out.push_str(&k);
        out.push(',');
        out.push_str(&v);
        out.push('\n');
    }
    out
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&key(k), x, rows);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), x, rows);
            }
        }
        Value::Number(n) => {
            let s = match (n.as_i64(), n.as_u64()) {
                (Some(i), _) => i.to_string(),
                (_, Some(u)) => u.to_string(),
                _ => fmt_float(n.as_f64().unwrap_or(f64::NAN)),
            };
            rows.push((prefix.to_string(), s));
        }
        Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
    }
}

pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in pairs {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}
