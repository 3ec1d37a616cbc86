//! Report envelopes and their JSON or CSV rendering.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A report under construction. Keys keep their insertion order.
pub struct Report(Map<String, Value>);

impl Report {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        let mut m = Map::new();
        m.insert("schema".into(), SCHEMA.into());
        m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        m.insert("command".into(), command.into());
        m.insert("seed".into(), seed.map_or(Value::Null, Value::from));
        Self(m)
    }

    pub fn put<T: Serialize + ?Sized>(&mut self, key: &str, value: &T) -> Result<(), CliError> {
        let v = serde_json::to_value(value).map_err(|e| CliError::Output(e.to_string()))?;
        self.0.insert(key.into(), v);
        Ok(())
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.0)
    }
}

/// Serialized information value: `{"nats": …, "bits": …}`.
pub fn info(nats: f64) -> Value {
    serde_json::to_value(infoscape::InfoValue::from_nats(nats)).expect("plain numbers serialize")
}

fn flatten(v: &Value, path: String, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                flatten(x, p, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(x, format!("{path}[{i}]"), out);
            }
        }
        Value::String(s) => out.push((path, s.clone())),
        Value::Null => out.push((path, String::new())),
        other => out.push((path, other.to_string())),
    }
}

/// Renders a report. CSV output is one `key,value` row per leaf, with keys as
/// dotted paths.
pub fn render(v: &Value, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Output(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut rows = Vec::new();
            flatten(v, String::new(), &mut rows);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["key", "value"]).map_err(|e| CliError::Output(e.to_string()))?;
            for (k, x) in rows {
                w.write_record([k, x]).map_err(|e| CliError::Output(e.to_string()))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Output(e.to_string()))?)
                .map_err(|e| CliError::Output(e.to_string()))
        }
    }
}
