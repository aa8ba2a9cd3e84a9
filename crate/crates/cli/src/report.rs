//! Tabular reports rendered as versioned CSV or JSON lines.

use std::io::Write;

use serde_json::{Map, Value};

pub const CSV_VERSION: &str = "rcm-csv v1";
pub const JSONL_VERSION: &str = "rcm-jsonl v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub command: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Set when an invariant check failed; the process exits with code 3.
    pub failure: Option<String>,
}

impl Report {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Report {
            command: command.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn row<S: ToString>(&mut self, cells: &[S]) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells.iter().map(|c| c.to_string()).collect());
    }

    /// Two-column key/value row.
    pub fn kv(&mut self, key: &str, value: impl ToString) {
        self.rows.push(vec![key.to_string(), value.to_string()]);
    }

    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => self.render_csv(),
            Format::Jsonl => self.render_jsonl(),
        }
    }

    fn render_csv(&self) -> Vec<u8> {
        let mut out = Vec::new();
        writeln!(out, "# {CSV_VERSION}").unwrap();
        writeln!(out, "# command={}", self.command).unwrap();
        for (k, v) in &self.meta {
            writeln!(out, "# {k}={v}").unwrap();
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns).unwrap();
        for r in &self.rows {
            w.write_record(r).unwrap();
        }
        w.into_inner().unwrap()
    }

    fn render_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut meta = Map::new();
        meta.insert("kind".into(), "meta".into());
        meta.insert("format".into(), JSONL_VERSION.into());
        meta.insert("command".into(), self.command.clone().into());
        for (k, v) in &self.meta {
            meta.insert(k.clone(), v.clone().into());
        }
        meta.insert("columns".into(), Value::from(self.columns.clone()));
        writeln!(out, "{}", Value::Object(meta)).unwrap();
        for r in &self.rows {
            let mut m = Map::new();
            m.insert("kind".into(), "row".into());
            for (c, v) in self.columns.iter().zip(r) {
                m.insert(c.clone(), v.clone().into());
            }
            writeln!(out, "{}", Value::Object(m)).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_version_header_and_quotes_names() {
        let mut r = Report::new("graph", &["key", "value"]);
        r.meta("template", "zd");
        r.kv("center", "(1,1)");
        let s = String::from_utf8(r.render(Format::Csv)).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# rcm-csv v1");
        assert_eq!(lines[1], "# command=graph");
        assert_eq!(lines[3], "key,value");
        assert_eq!(lines[4], "center,\"(1,1)\"");
    }

    #[test]
    fn jsonl_meta_then_rows() {
        let mut r = Report::new("oracle", &["key", "value"]);
        r.kv("Z", "3/1");
        let s = String::from_utf8(r.render(Format::Jsonl)).unwrap();
        let lines: Vec<Value> = s.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines[0]["kind"], "meta");
        assert_eq!(lines[0]["format"], JSONL_VERSION);
        assert_eq!(lines[1]["value"], "3/1");
    }
}
