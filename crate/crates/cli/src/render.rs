//! Report envelope and its json / md / csv renderings.

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Md,
    Csv,
}

/// Rows for the tabular formats.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Everything a subcommand reports.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub command: String,
    pub passed: bool,
    pub failures: Vec<String>,
    pub report: Value,
    #[serde(skip)]
    pub table: Option<Table>,
}

impl Envelope {
    pub fn new(command: &str, report: impl Serialize, failures: Vec<String>) -> Self {
        Envelope {
            command: command.to_string(),
            passed: failures.is_empty(),
            failures,
            report: serde_json::to_value(report).expect("reports serialise"),
            table: None,
        }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("reports serialise") + "\n",
            Format::Md => self.markdown(),
            Format::Csv => csv_text(&self.tabular()),
        }
    }

    fn tabular(&self) -> Table {
        self.table.clone().unwrap_or_else(|| {
            let mut t = Table::new(&["key", "value"]);
            flatten(&self.report, String::new(), &mut t.rows);
            t
        })
    }

    fn markdown(&self) -> String {
        let mut out = format!(
            "**{}**: {}\n\n",
            self.command,
            if self.passed { "pass" } else { "FAIL" }
        );
        for f in &self.failures {
            out += &format!("- {f}\n");
        }
        if !self.failures.is_empty() {
            out.push('\n');
        }
        let t = self.tabular();
        let line = |cells: &[String]| format!("| {} |\n", cells.iter().map(|c| c.replace('|', "\\|")).collect::<Vec<_>>().join(" | "));
        out += &line(&t.header);
        out += &format!("|{}\n", "---|".repeat(t.header.len()));
        for row in &t.rows {
            out += &line(row);
        }
        out
    }
}

/// Per-sample arrays longer than this are summarised in the tabular formats.
const MAX_INLINE_ITEMS: usize = 16;

fn flatten(v: &Value, prefix: String, out: &mut Vec<Vec<String>>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(x, key(k), out);
            }
        }
        Value::Array(items) if items.len() > MAX_INLINE_ITEMS => {
            out.push(vec![prefix, format!("[{} items]", items.len())]);
        }
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            out.push(vec![prefix, v.to_string()]);
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(x, key(&i.to_string()), out);
            }
        }
        Value::String(s) => out.push(vec![prefix, s.clone()]),
        other => out.push(vec![prefix, other.to_string()]),
    }
}

fn csv_text(t: &Table) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&t.header).expect("in-memory write");
    for row in &t.rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Shortest round-trip text of a float, in exponent form when very small or
/// large; `null` for non-finite values as in JSON.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        "null".into()
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flatten_nests_and_summarises() {
        let env = Envelope::new("x", json!({"a": 1, "b": {"c": [1, 2]}, "d": vec![0; 20], "e": [{"f": "g"}]}), vec![]);
        let t = env.tabular();
        let keys: Vec<&str> = t.rows.iter().map(|r| r[0].as_str()).collect();
        assert_eq!(keys, ["a", "b.c", "d", "e.0.f"]);
        assert_eq!(t.rows[1][1], "[1,2]");
        assert_eq!(t.rows[2][1], "[20 items]");
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.5, -2.0e-7, 3.25e20, 0.1 + 0.2] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(2.0e-7), "2e-7");
        assert_eq!(num(f64::NAN), "null");
    }

    #[test]
    fn csv_quotes_and_uses_lf() {
        let mut t = Table::new(&["k", "v"]);
        t.push(vec!["a,b".into(), "1".into()]);
        assert_eq!(csv_text(&t), "k,v\n\"a,b\",1\n");
    }

    #[test]
    fn markdown_lists_failures_and_escapes_pipes() {
        let mut env = Envelope::new("y", json!({"k": "a|b"}), vec!["bad".into()]);
        let md = env.render(Format::Md);
        assert!(md.starts_with("**y**: FAIL\n\n- bad\n"));
        assert!(md.contains("a\\|b"));
        env.passed = true;
        assert!(env.render(Format::Json).contains("\"passed\": true"));
    }
}
