//! CSV tables, the verdict document and the manifest.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

/// Shortest decimal that parses back to the same bits; 17 significant digits
/// if that ever fails.
pub fn float(v: f64) -> String {
    let s = format!("{v:?}");
    if s.parse::<f64>().map(f64::to_bits) == Ok(v.to_bits()) || v.is_nan() {
        s
    } else {
        format!("{v:.16e}")
    }
}

/// A CSV table built in memory: header row, LF line endings.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    pub name: String,
    header: Vec<String>,
    body: String,
}

impl Csv {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Csv {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.header.len(), "row width for {}", self.name);
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.body.push_str(&line.join(","));
        self.body.push('\n');
    }

    pub fn rows(&self) -> usize {
        self.body.lines().count()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        out.push_str(&self.body);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => float(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Everything a scenario produces.
#[derive(Debug, Clone, Default)]
pub struct Outputs {
    pub tables: Vec<Csv>,
    pub verdict: String,
}

impl Outputs {
    pub fn line(&mut self, text: impl AsRef<str>) {
        self.verdict.push_str(text.as_ref());
        self.verdict.push('\n');
    }

    pub fn table(&self, name: &str) -> Option<&Csv> {
        self.tables.iter().find(|t| t.name == name)
    }
}

pub struct Manifest<'a> {
    pub scenario: &'a str,
    pub config_text: &'a str,
    pub seed: u64,
    pub elapsed_secs: f64,
}

impl Manifest<'_> {
    pub fn render(&self, outputs: &Outputs) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "heatlab-experiments {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "elapsed_seconds: {:.3}", self.elapsed_secs);
        for t in &outputs.tables {
            let _ = writeln!(s, "file: {}.csv ({} rows)", t.name, t.rows());
        }
        s.push_str("--- config ---\n");
        s.push_str(self.config_text);
        if !self.config_text.ends_with('\n') {
            s.push('\n');
        }
        s
    }
}

pub fn write_all(dir: &Path, outputs: &Outputs, manifest: &Manifest) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for t in &outputs.tables {
        fs::write(dir.join(format!("{}.csv", t.name)), t.render())?;
    }
    fs::write(dir.join("verdict.txt"), &outputs.verdict)?;
    fs::write(dir.join("manifest.txt"), manifest.render(outputs))?;
    Ok(())
}
