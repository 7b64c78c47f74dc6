//! CSV and JSON artifacts. Both embed the resolved config and the library
//! version; CSV numbers carry 17 significant digits.

use std::fmt::Write as _;
use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Column-oriented result table.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `{column: [values...]}`.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (j, name) in self.columns.iter().enumerate() {
            let col: Vec<Value> = self.rows.iter().map(|r| r[j].json()).collect();
            map.insert((*name).to_string(), Value::Array(col));
        }
        Value::Object(map)
    }
}

/// A command's result: scalar summaries, an optional table, and the JSON
/// body. CSV output carries the summaries as `#` lines above the table.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub summary: Vec<(&'static str, Value)>,
    pub table: Table,
    pub json: Value,
}

pub fn render(cfg: &RunConfig, artifact: &Artifact) -> String {
    match cfg.format() {
        Format::Json => {
            let doc = json!({
                "version": dephasing_core::VERSION,
                "config": cfg,
                "result": artifact.json,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::new();
            writeln!(s, "# dephasing-lab {}", dephasing_core::VERSION).unwrap();
            writeln!(s, "# config: {}", cfg.to_json()).unwrap();
            for (key, value) in &artifact.summary {
                let v = match value {
                    Value::Number(n) => match n.as_f64() {
                        Some(x) if !n.is_u64() && !n.is_i64() => format!("{x:.16e}"),
                        _ => n.to_string(),
                    },
                    Value::String(t) => t.clone(),
                    other => other.to_string(),
                };
                writeln!(s, "# {key}: {v}").unwrap();
            }
            writeln!(s, "{}", artifact.table.columns.join(",")).unwrap();
            for row in &artifact.table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                writeln!(s, "{}", cells.join(",")).unwrap();
            }
            s
        }
    }
}

pub fn write(cfg: &RunConfig, artifact: &Artifact) -> std::io::Result<()> {
    let text = render(cfg, artifact);
    match cfg.out_path() {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Command, OutputConfig};

    #[test]
    fn csv_keeps_full_precision() {
        let mut t = Table::new(&["x"]);
        t.push(vec![Cell::Num(0.1)]);
        let a = Artifact {
            summary: vec![("third", json!(1.0 / 3.0))],
            table: t,
            json: Value::Null,
        };
        let cfg = RunConfig::empty(Command::Sweep);
        let text = render(&cfg, &a);
        let last = text.lines().last().unwrap();
        assert_eq!(last.parse::<f64>().unwrap(), 0.1);
        assert!(text.starts_with("# dephasing-lab "));
        assert!(text.contains("# config: {\"command\":\"sweep\"}"));
        let third = text.lines().find(|l| l.starts_with("# third")).unwrap();
        assert_eq!(third.split(": ").nth(1).unwrap().parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn json_embeds_version_and_config() {
        let mut cfg = RunConfig::empty(Command::Sweep);
        cfg.output = Some(OutputConfig {
            path: None,
            format: Some(Format::Json),
        });
        let a = Artifact {
            summary: vec![],
            table: Table::new(&["x"]),
            json: json!({"ok": true}),
        };
        let doc: Value = serde_json::from_str(&render(&cfg, &a)).unwrap();
        assert_eq!(doc["version"], dephasing_core::VERSION);
        assert_eq!(doc["config"]["command"], "sweep");
        assert_eq!(doc["result"]["ok"], true);
    }
}
