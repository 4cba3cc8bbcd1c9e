//! Report envelope and the three renderings: JSON, CSV and aligned text.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub config_echo: Value,
    pub results: Value,
    pub annotations: Vec<String>,
}

/// Writes every float with 17 significant digits so parsing it back gives
/// the same `f64`.
struct RoundTrip;

impl Formatter for RoundTrip {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json(report: &Report) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTrip);
    report.serialize(&mut ser).expect("serializing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format!("{f:.16e}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Array(_) | Value::Object(_) => unreachable!("flattened"),
    }
}

/// Turns nested values into dotted-key leaves, in document order.
pub fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        leaf => out.push((prefix.to_string(), leaf.clone())),
    }
}

/// `key,value` rows for the results and annotations. A result holding only a
/// list of flat rows (a sweep) is written as a plain table instead.
pub fn to_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(rows) = row_table(&report.results) {
        let header: Vec<&String> = rows[0].keys().collect();
        w.write_record(&header).unwrap();
        for r in &rows {
            w.write_record(r.values().map(scalar)).unwrap();
        }
    } else {
        w.write_record(["key", "value"]).unwrap();
        let mut leaves = Vec::new();
        flatten("", &report.results, &mut leaves);
        for (i, a) in report.annotations.iter().enumerate() {
            leaves.push((format!("annotations.{i}"), Value::String(a.clone())));
        }
        for (k, v) in leaves {
            w.write_record([k, scalar(&v)]).unwrap();
        }
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn row_table(results: &Value) -> Option<Vec<&Map<String, Value>>> {
    let m = results.as_object()?;
    if m.len() != 1 {
        return None;
    }
    let rows = m.values().next()?.as_array()?;
    let rows: Vec<_> = rows.iter().map(|r| r.as_object()).collect::<Option<_>>()?;
    let first = rows.first()?;
    let same = rows
        .iter()
        .all(|r| r.keys().eq(first.keys()) && r.values().all(is_scalar));
    same.then_some(rows)
}

fn pretty(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().unwrap();
            if f != 0.0 && (f.abs() < 1e-4 || f.abs() >= 1e6) {
                format!("{f:.6e}")
            } else {
                format!("{f:.6}")
            }
        }
        other => scalar(other),
    }
}

fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s}{}", " ".repeat(widths[c] - s.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Renders a list of flat objects as a column table.
fn column_table(rows: &[Value]) -> Option<String> {
    let objs: Vec<&Map<String, Value>> = rows.iter().map(|r| r.as_object()).collect::<Option<_>>()?;
    let first = objs.first()?;
    if !objs.iter().all(|o| o.keys().eq(first.keys()) && o.values().all(is_scalar)) {
        return None;
    }
    let mut table = vec![first.keys().cloned().collect::<Vec<_>>()];
    table.extend(objs.iter().map(|o| o.values().map(pretty).collect()));
    Some(aligned(&table))
}

fn render_section(name: &str, v: &Value, out: &mut String) {
    if let Value::Array(rows) = v {
        if let Some(t) = column_table(rows) {
            out.push_str(&format!("\n[{name}]\n{t}"));
            return;
        }
    }
    let mut leaves = Vec::new();
    flatten("", v, &mut leaves);
    let rows: Vec<Vec<String>> = leaves.iter().map(|(k, v)| vec![k.clone(), pretty(v)]).collect();
    out.push_str(&format!("\n[{name}]\n{}", aligned(&rows)));
}

pub fn to_table(report: &Report) -> String {
    let mut out = format!("timebell {}\n", report.command);
    let fields: Vec<(String, &Value)> = match &report.results {
        Value::Object(m) => m.iter().map(|(k, v)| (k.clone(), v)).collect(),
        other => vec![("results".to_string(), other)],
    };
    // Top-level scalars are gathered into one aligned block ahead of the sections.
    let scalars: Vec<Vec<String>> = fields
        .iter()
        .filter(|(_, v)| is_scalar(v))
        .map(|(k, v)| vec![k.clone(), pretty(v)])
        .collect();
    if !scalars.is_empty() {
        out.push('\n');
        out.push_str(&aligned(&scalars));
    }
    for (k, v) in fields.iter().filter(|(_, v)| !is_scalar(v)) {
        render_section(k, v, &mut out);
    }
    if !report.annotations.is_empty() {
        out.push_str("\nnotes:\n");
        for a in &report.annotations {
            out.push_str(&format!("  - {a}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn report(results: Value) -> Report {
        Report {
            command: "test",
            config_echo: json!({}),
            results,
            annotations: vec!["note".into()],
        }
    }

    #[test]
    fn floats_round_trip() {
        let values = [0.1, 1.0 / 3.0, 2f64.sqrt() * 2.0, -0.0, 1e-300, 5e-324, f64::MAX, 0.5 * (1.0 + 2f64.sqrt())];
        let text = to_json(&report(json!({ "v": values })));
        let back: Value = serde_json::from_str(&text).unwrap();
        for (i, &x) in values.iter().enumerate() {
            assert_eq!(back["results"]["v"][i].as_f64().unwrap().to_bits(), x.to_bits(), "{x}");
        }
    }

    #[test]
    fn integers_stay_integers() {
        let text = to_json(&report(json!({ "n": 1_000_000u64 })));
        assert!(text.contains("\"n\":1000000"));
    }

    #[test]
    fn csv_flattens() {
        let csv = to_csv(&report(json!({ "a": { "b": 1.5 }, "c": [true] })));
        assert!(csv.starts_with("key,value\n"));
        assert!(csv.contains("a.b,1.5000000000000000e0\n"));
        assert!(csv.contains("c.0,true\n"));
        assert!(csv.contains("annotations.0,note\n"));
    }

    #[test]
    fn csv_sweep_is_columnar() {
        let csv = to_csv(&report(json!({ "sweep": [{ "x": 0.0, "y": 1 }, { "x": 0.5, "y": 2 }] })));
        assert!(csv.starts_with("x,y\n"), "{csv}");
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn table_aligns_columns() {
        let t = to_table(&report(json!({ "rows": [{ "name": "a", "v": 1.0 }, { "name": "longer", "v": 2.0 }] })));
        assert!(t.contains("name    v"), "{t}");
        assert!(t.contains("notes:"));
    }
}
