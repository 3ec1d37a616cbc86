//! Reading probability tables from CSV or JSON.
//!
//! A table is a list of records whose leading columns are integer state labels
//! (from 0) and whose last column `p` is a probability. CSV files carry a
//! header naming the columns; JSON files hold an array of objects with the same
//! keys. Cardinalities are one more than the largest label seen, and states
//! that never appear get probability zero.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use infoscape::{JointDistribution, StateSpace};
use serde_json::Value;

use crate::CliError;

/// Inputs whose mass is within this of 1 are accepted and rescaled exactly.
pub const SUM_TOL: f64 = 1e-9;

#[derive(Debug)]
struct Record {
    states: Vec<usize>,
    p: f64,
    line: usize,
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

fn is_json(path: &Path, text: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || matches!(text.trim_start().chars().next(), Some('[') | Some('{'))
}

fn read_csv(path: &Path, text: &str, columns: &[&str]) -> Result<Vec<Record>, CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_error(path, 1, e.to_string()))?.clone();
    let found: Vec<&str> = header.iter().collect();
    if found != columns {
        return Err(parse_error(path, 1, format!("expected header `{}`, found `{}`", columns.join(","), found.join(","))));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut states = Vec::with_capacity(columns.len() - 1);
        for (name, field) in columns.iter().zip(rec.iter()).take(columns.len() - 1) {
            let v = field
                .parse::<usize>()
                .map_err(|_| parse_error(path, line, format!("column `{name}`: `{field}` is not a state label")))?;
            states.push(v);
        }
        let field = &rec[columns.len() - 1];
        let p = field.parse::<f64>().map_err(|_| parse_error(path, line, format!("column `p`: `{field}` is not a number")))?;
        out.push(Record { states, p, line });
    }
    Ok(out)
}

fn read_json(path: &Path, text: &str, columns: &[&str]) -> Result<Vec<Record>, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| parse_error(path, e.line(), e.to_string()))?;
    let Value::Array(items) = value else {
        return Err(parse_error(path, 1, "expected an array of records"));
    };
    let mut out = Vec::with_capacity(items.len());
    for (k, item) in items.iter().enumerate() {
        // JSON records are numbered from 1 in messages.
        let line = k + 1;
        let obj = item.as_object().ok_or_else(|| parse_error(path, line, "record is not an object"))?;
        if obj.len() != columns.len() || !columns.iter().all(|c| obj.contains_key(*c)) {
            return Err(parse_error(path, line, format!("record must have exactly the keys {}", columns.join(","))));
        }
        let mut states = Vec::with_capacity(columns.len() - 1);
        for name in &columns[..columns.len() - 1] {
            let v = obj[*name]
                .as_u64()
                .ok_or_else(|| parse_error(path, line, format!("key `{name}` is not a state label")))?;
            states.push(v as usize);
        }
        let p = obj["p"].as_f64().ok_or_else(|| parse_error(path, line, "key `p` is not a number"))?;
        out.push(Record { states, p, line });
    }
    Ok(out)
}

/// The table's tensor in row-major order, its cardinalities and its total mass.
fn read_table(path: &Path, columns: &[&str]) -> Result<(Vec<usize>, Vec<f64>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    let records = if is_json(path, &text) { read_json(path, &text, columns)? } else { read_csv(path, &text, columns)? };
    if records.is_empty() {
        return Err(parse_error(path, 1, "table has no records"));
    }
    let k = columns.len() - 1;
    let mut shape = vec![0usize; k];
    for r in &records {
        for (d, &s) in shape.iter_mut().zip(&r.states) {
            *d = (*d).max(s + 1);
        }
    }
    let size: usize = shape.iter().product();
    if size > 50_000_000 {
        return Err(parse_error(path, 1, "state space is too large"));
    }
    let mut data = vec![0.0; size];
    let mut seen = HashSet::new();
    for r in &records {
        if !seen.insert(r.states.clone()) {
            return Err(parse_error(path, r.line, format!("duplicate state {:?}", r.states)));
        }
        let idx = r.states.iter().zip(&shape).fold(0, |acc, (&s, &n)| acc * n + s);
        data[idx] = r.p;
    }
    Ok((shape, data))
}

fn build(space: StateSpace, data: Vec<f64>, renormalize: bool) -> Result<JointDistribution, CliError> {
    for (i, &v) in data.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(CliError::Core(infoscape::Error::InvalidMass { index: i, value: v }));
        }
    }
    let total: f64 = data.iter().sum();
    if !renormalize && (total - 1.0).abs() > SUM_TOL {
        return Err(CliError::Core(infoscape::Error::NotNormalized(total)));
    }
    Ok(JointDistribution::renormalized(space, data)?)
}

/// A joint distribution over `S × X × Y` from a table with columns `s,x,y,p`.
pub fn read_joint(path: &Path, renormalize: bool) -> Result<JointDistribution, CliError> {
    let (shape, data) = read_table(path, &["s", "x", "y", "p"])?;
    let space = StateSpace::sxy(shape[0], shape[1], shape[2])?;
    build(space, data, renormalize)
}

/// A marginal table over `S × response` with columns `s,<response>,p`, where
/// the response axis is `X` or `Y`.
pub fn read_marginal(path: &Path, response: &str, renormalize: bool) -> Result<JointDistribution, CliError> {
    let column = response.to_ascii_lowercase();
    let (shape, data) = read_table(path, &["s", &column, "p"])?;
    let space = StateSpace::new([("S", shape[0]), (response, shape[1])])?;
    build(space, data, renormalize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(ext: &str, body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_and_json_agree() {
        let csv = file(".csv", "s,x,y,p\n0,0,0,0.25\n0,1,1,0.25\n1,0,1,0.25\n1,1,0,0.25\n");
        let json = file(
            ".json",
            r#"[{"s":0,"x":0,"y":0,"p":0.25},{"s":0,"x":1,"y":1,"p":0.25},
                {"s":1,"x":0,"y":1,"p":0.25},{"s":1,"x":1,"y":0,"p":0.25}]"#,
        );
        let a = read_joint(csv.path(), false).unwrap();
        let b = read_joint(json.path(), false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.space().shape(), vec![2, 2, 2]);
        assert_eq!(a.prob(&[0, 1, 0]), 0.0);
    }

    #[test]
    fn errors_name_the_line() {
        let f = file(".csv", "s,x,y,p\n0,0,0,0.5\n0,x,1,0.5\n");
        match read_joint(f.path(), false) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let f = file(".csv", "s,x,y,p\n0,0,0,0.5\n0,0,0,0.5\n");
        assert!(matches!(read_joint(f.path(), false), Err(CliError::Parse { line: 3, .. })));
        let f = file(".csv", "s,x,p\n0,0,1\n");
        assert!(matches!(read_joint(f.path(), false), Err(CliError::Parse { line: 1, .. })));
    }

    #[test]
    fn normalization_is_checked_unless_requested() {
        let f = file(".csv", "s,x,y,p\n0,0,0,1\n1,1,1,1\n");
        assert!(matches!(read_joint(f.path(), false), Err(CliError::Core(infoscape::Error::NotNormalized(_)))));
        let q = read_joint(f.path(), true).unwrap();
        assert_eq!(q.prob(&[1, 1, 1]), 0.5);
        let f = file(".csv", "s,x,y,p\n0,0,0,1.0000000001\n");
        assert!(read_joint(f.path(), false).is_err());
        let f = file(".csv", "s,x,y,p\n0,0,0,-0.5\n1,1,1,1.5\n");
        assert!(matches!(read_joint(f.path(), true), Err(CliError::Core(infoscape::Error::InvalidMass { .. }))));
    }

    #[test]
    fn marginals_use_their_own_headers() {
        let f = file(".csv", "s,y,p\n0,0,0.2\n0,1,0.3\n1,0,0.1\n1,1,0.4\n");
        let m = read_marginal(f.path(), "Y", false).unwrap();
        assert_eq!(m.space().axes()[1].name, "Y");
        assert!(read_marginal(f.path(), "X", false).is_err());
    }
}
