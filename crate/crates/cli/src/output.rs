//! JSON and CSV emission. Both formats print every float rounded to 12
//! significant digits, so the same run gives the same decimals either way.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::{Map, Number, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn round12(x: f64) -> f64 {
    format!("{x:.11e}").parse().unwrap()
}

/// Finite floats become rounded numbers; infinities become `"inf"` and
/// `"-inf"`, NaN becomes null.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        Value::Null
    } else if x.is_infinite() {
        Value::String(if x > 0.0 { "inf" } else { "-inf" }.into())
    } else {
        Value::Number(Number::from_f64(round12(x)).unwrap())
    }
}

/// Rounds every float inside `v`.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap()),
        Value::Array(items) => Value::Array(items.into_iter().map(normalize).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, normalize(v))).collect())
        }
        other => other,
    }
}

/// `{"status": "ok", ...fields}` or `{"status": "n/a", "reason": ...}`.
pub fn applicable(fields: Result<Value, String>) -> Value {
    let mut map = Map::new();
    match fields {
        Ok(Value::Object(inner)) => {
            map.insert("status".into(), "ok".into());
            map.extend(inner);
        }
        Ok(other) => {
            map.insert("status".into(), "ok".into());
            map.insert("value".into(), other);
        }
        Err(reason) => {
            map.insert("status".into(), "n/a".into());
            map.insert("reason".into(), reason.into());
        }
    }
    Value::Object(map)
}

/// Flattens nested objects into dotted column names.
pub fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        Value::Null => out.push((prefix.into(), String::new())),
        Value::String(s) => out.push((prefix.into(), s.clone())),
        other => out.push((prefix.into(), other.to_string())),
    }
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_csv(rows: &[Value], w: Box<dyn Write>) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(w);
    let mut header: Option<Vec<String>> = None;
    for row in rows {
        let mut cells = Vec::new();
        flatten("", row, &mut cells);
        let names: Vec<String> = cells.iter().map(|(k, _)| k.clone()).collect();
        match &header {
            None => {
                csv.write_record(&names)?;
                header = Some(names);
            }
            Some(h) if *h != names => {
                return Err(CliError {
                    code: crate::EXIT_INTERNAL,
                    message: "rows with differing columns".into(),
                })
            }
            Some(_) => {}
        }
        csv.write_record(cells.iter().map(|(_, v)| v))?;
    }
    csv.flush()?;
    Ok(())
}

/// Writes one document: pretty JSON, or a CSV header and a single row.
pub fn emit(doc: Value, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let doc = normalize(doc);
    let mut w = sink(path)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
            Ok(())
        }
        Format::Csv => write_csv(&[doc], w),
    }
}

/// Writes a table: one CSV row per entry, or a JSON document holding the
/// rows under `rows`.
pub fn emit_rows(
    command: &str,
    rows: Vec<Value>,
    format: Format,
    path: Option<&Path>,
) -> Result<(), CliError> {
    let rows: Vec<Value> = rows.into_iter().map(normalize).collect();
    let mut w = sink(path)?;
    match format {
        Format::Json => {
            let doc = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "command": command,
                "rows": rows,
            });
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
            Ok(())
        }
        Format::Csv => write_csv(&rows, w),
    }
}
