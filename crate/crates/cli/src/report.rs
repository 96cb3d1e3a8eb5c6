//! Command output as a small document rendered to text, JSON or LaTeX.

use std::fmt::Write as _;

use riccisym::expr::{to_latex, LatexOptions, Verdict};
use riccisym::Expr;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
    Latex,
}

#[derive(Clone, Debug, Default)]
pub struct Row {
    pub label: String,
    pub expr: Option<Expr>,
    pub verdict: Option<Verdict>,
    pub note: Option<String>,
}

impl Row {
    pub fn expr(label: impl Into<String>, e: Expr) -> Self {
        Row { label: label.into(), expr: Some(e), ..Row::default() }
    }

    pub fn verdict(label: impl Into<String>, v: Verdict) -> Self {
        Row { label: label.into(), verdict: Some(v), ..Row::default() }
    }

    pub fn note(label: impl Into<String>, note: impl Into<String>) -> Self {
        Row { label: label.into(), note: Some(note.into()), ..Row::default() }
    }

    pub fn with_verdict(mut self, v: Verdict) -> Self {
        self.verdict = Some(v);
        self
    }
}

#[derive(Clone, Debug)]
pub struct Section {
    pub name: String,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct Doc {
    pub command: String,
    /// Top-level scalar fields, in insertion order for text output.
    pub fields: Vec<(String, Value)>,
    pub sections: Vec<Section>,
}

impl Doc {
    pub fn new(command: &str) -> Self {
        Doc { command: command.to_string(), fields: Vec::new(), sections: Vec::new() }
    }

    pub fn field(&mut self, key: &str, v: impl Into<Value>) {
        self.fields.push((key.to_string(), v.into()));
    }

    pub fn section(&mut self, name: &str, rows: Vec<Row>) {
        self.sections.push(Section { name: name.to_string(), rows });
    }

    pub fn render(&self, f: Format) -> String {
        match f {
            Format::Text => self.text(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json()).expect("plain values");
                s.push('\n');
                s
            }
            Format::Latex => self.latex(),
        }
    }

    pub fn json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.command.clone()));
        for (k, v) in &self.fields {
            m.insert(k.clone(), v.clone());
        }
        for s in &self.sections {
            m.insert(s.name.clone(), Value::Array(s.rows.iter().map(row_json).collect()));
        }
        Value::Object(m)
    }

    fn text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.command).unwrap();
        for (k, v) in &self.fields {
            writeln!(out, "{k}: {}", scalar_text(v)).unwrap();
        }
        for s in &self.sections {
            writeln!(out, "\n[{}]", s.name).unwrap();
            if s.rows.is_empty() {
                writeln!(out, "  (none)").unwrap();
            }
            for r in &s.rows {
                let mut line = format!("  {}", r.label);
                if let Some(e) = &r.expr {
                    write!(line, " = {e}").unwrap();
                }
                if let Some(v) = &r.verdict {
                    write!(line, "  [{}]", v.label()).unwrap();
                    if let Verdict::NonZero { witness, value, .. } = v {
                        write!(line, " value {value:e} at {}", witness_text(witness)).unwrap();
                    }
                }
                if let Some(n) = &r.note {
                    write!(line, "  {n}").unwrap();
                }
                writeln!(out, "{line}").unwrap();
            }
        }
        out
    }

    fn latex(&self) -> String {
        let opts = LatexOptions::default();
        let mut out = String::from("\\documentclass{article}\n\\usepackage{amsmath}\n\\begin{document}\n");
        writeln!(out, "\\section*{{{}}}", escape(&self.command)).unwrap();
        if !self.fields.is_empty() {
            out.push_str("\\begin{itemize}\n");
            for (k, v) in &self.fields {
                writeln!(out, "\\item {}: {}", escape(k), escape(&scalar_text(v))).unwrap();
            }
            out.push_str("\\end{itemize}\n");
        }
        for s in &self.sections {
            writeln!(out, "\\subsection*{{{}}}", escape(&s.name)).unwrap();
            if s.rows.is_empty() {
                out.push_str("None.\n");
                continue;
            }
            out.push_str("\\begin{align*}\n");
            let n = s.rows.len();
            for (i, r) in s.rows.iter().enumerate() {
                write!(out, "&\\text{{{}}}", escape(&r.label)).unwrap();
                if let Some(e) = &r.expr {
                    write!(out, " = {}", to_latex(e, &opts)).unwrap();
                }
                if let Some(v) = &r.verdict {
                    write!(out, " \\quad \\text{{{}}}", escape(v.label())).unwrap();
                }
                if let Some(note) = &r.note {
                    write!(out, " \\quad \\text{{{}}}", escape(note)).unwrap();
                }
                out.push_str(if i + 1 < n { " \\\\\n" } else { "\n" });
            }
            out.push_str("\\end{align*}\n");
        }
        out.push_str("\\end{document}\n");
        out
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn witness_text(w: &riccisym::expr::Assignment) -> String {
    let parts: Vec<String> = w.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{{{}}}", parts.join(", "))
}

pub fn verdict_json(v: &Verdict) -> Value {
    match v {
        Verdict::ZeroSymbolic => json!({"kind": "zero_symbolic"}),
        Verdict::ZeroProbabilistic { points, max_abs } => {
            json!({"kind": "zero_probabilistic", "points": points, "max_abs": max_abs})
        }
        Verdict::NonZero { witness, value, note } => {
            let w: Map<String, Value> = witness.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            json!({"kind": "nonzero", "value": value, "witness": w, "note": note})
        }
    }
}

fn row_json(r: &Row) -> Value {
    let mut m = Map::new();
    m.insert("label".into(), Value::String(r.label.clone()));
    if let Some(e) = &r.expr {
        m.insert("expr".into(), Value::String(e.to_string()));
    }
    if let Some(v) = &r.verdict {
        m.insert("verdict".into(), verdict_json(v));
    }
    if let Some(n) = &r.note {
        m.insert("note".into(), Value::String(n.clone()));
    }
    Value::Object(m)
}

/// Escape text for LaTeX text mode.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\textbackslash{}"),
            '_' | '#' | '$' | '%' | '&' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            '^' => out.push_str("\\textasciicircum{}"),
            '~' => out.push_str("\\textasciitilde{}"),
            _ => out.push(c),
        }
    }
    out
}
