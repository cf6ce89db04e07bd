//! CSV traces, JSON summaries and SVG line plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::scenario::Format;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Float(Vec<f64>),
    Text(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Float(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    fn cell(&self, i: usize) -> String {
        match self {
            Column::Float(v) => v[i].to_string(),
            Column::Text(v) => v[i].clone(),
        }
    }
}

/// A named, column-oriented trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<(String, Column)>,
}

impl Table {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            columns: Vec::new(),
        }
    }

    pub fn float(mut self, header: impl Into<String>, values: Vec<f64>) -> Self {
        self.columns.push((header.into(), Column::Float(values)));
        self
    }

    pub fn text(mut self, header: impl Into<String>, values: Vec<String>) -> Self {
        self.columns.push((header.into(), Column::Text(values)));
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    pub fn get(&self, header: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(h, _)| h == header).and_then(|(_, c)| match c {
            Column::Float(v) => Some(v.as_slice()),
            Column::Text(_) => None,
        })
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|(h, _)| h.as_str()))?;
        for i in 0..self.rows() {
            w.write_record(self.columns.iter().map(|(_, c)| c.cell(i)))?;
        }
        w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))
    }
}

/// One line plot: x column against one or more y columns of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub table: String,
    pub x: String,
    pub y: Vec<String>,
}

/// Per-experiment outcomes, embedded with provenance of the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub outcomes: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
    pub defaults_applied: Vec<String>,
    pub wall_clock_s: f64,
}

impl RunSummary {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            scenario_hash: String::new(),
            seed: 0,
            outcomes: BTreeMap::new(),
            warnings: Vec::new(),
            defaults_applied: Vec::new(),
            wall_clock_s: 0.0,
        }
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.outcomes.insert(key.into(), v);
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.outcomes.get(key).and_then(|v| match v {
            serde_json::Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            v => v.as_f64(),
        })
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub summary: RunSummary,
    pub traces: Vec<Table>,
    pub plots: Vec<Plot>,
}

impl ExperimentOutput {
    pub fn trace(&self, name: &str) -> Option<&Table> {
        self.traces.iter().find(|t| t.name == name)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `out_root/<hash>/<experiment>/…` and returns the files created.
pub fn emit_outputs(results: &[ExperimentOutput], out_root: &Path, hash: &str, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for r in results {
        let dir = out_root.join(hash).join(&r.summary.experiment);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        if formats.contains(&Format::Csv) {
            for t in &r.traces {
                let p = dir.join(format!("{}.csv", t.name));
                write(&p, &t.to_csv()?)?;
                files.push(p);
            }
        }
        if formats.contains(&Format::Json) {
            let p = dir.join("summary.json");
            let mut text = serde_json::to_string_pretty(&r.summary)?;
            text.push('\n');
            write(&p, text.as_bytes())?;
            files.push(p);
        }
        if formats.contains(&Format::Svg) {
            for plot in &r.plots {
                let Some(table) = r.trace(&plot.table) else { continue };
                let p = dir.join(format!("{}.svg", plot.name));
                write(&p, render_svg(plot, table).as_bytes())?;
                files.push(p);
            }
        }
    }
    Ok(files)
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Minimal standalone SVG line chart.
pub fn render_svg(plot: &Plot, table: &Table) -> String {
    let (w, h, m) = (640.0, 400.0, 56.0);
    let x = table.get(&plot.x).unwrap_or(&[]);
    let ys: Vec<(&String, &[f64])> = plot.y.iter().filter_map(|n| table.get(n).map(|v| (n, v))).collect();
    let finite = |v: &&f64| v.is_finite();
    let (x0, x1) = bounds(x.iter().filter(finite).copied());
    let (y0, y1) = bounds(ys.iter().flat_map(|(_, v)| v.iter().filter(finite).copied()));
    let sx = |v: f64| m + (v - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |v: f64| h - m - (v - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, w / 2.0, escape(&plot.title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    );
    for (v, anchor, px, py) in [
        (x0, "start", m, h - m + 18.0),
        (x1, "end", w - m, h - m + 18.0),
    ] {
        let _ = writeln!(s, r#"<text x="{px}" y="{py}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{v:.4e}</text>"#);
    }
    for (v, py) in [(y0, h - m), (y1, m + 4.0)] {
        let _ = writeln!(s, r#"<text x="{}" y="{py}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.4e}</text>"#, m - 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#, w / 2.0, h - 12.0, escape(&plot.x));
    for (k, (name, y)) in ys.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        let step = (x.len() / 2000).max(1);
        for (i, (xv, yv)) in x.iter().zip(y.iter()).enumerate().step_by(step) {
            if xv.is_finite() && yv.is_finite() {
                let _ = write!(d, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, sx(*xv), sy(*yv));
            }
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            w - m - 150.0,
            m + 14.0 * (k as f64 + 1.0),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo > 0.0 {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentOutput {
        let t = Table::new("trace").float("t", vec![0.0, 1.0, 2.0]).float("y", vec![1.0, 0.5, 0.25]).text(
            "phase",
            vec!["a".into(), "a".into(), "b".into()],
        );
        ExperimentOutput {
            summary: RunSummary::new("demo"),
            traces: vec![t.clone(), Table { name: "other".into(), ..t }],
            plots: vec![Plot {
                name: "y_vs_t".into(),
                title: "y".into(),
                table: "trace".into(),
                x: "t".into(),
                y: vec!["y".into()],
            }],
        }
    }

    #[test]
    fn csv_layout() {
        let text = String::from_utf8(sample().traces[0].to_csv().unwrap()).unwrap();
        assert_eq!(text, "t,y,phase\n0,1,a\n1,0.5,a\n2,0.25,b\n");
    }

    #[test]
    fn file_counts_follow_formats() {
        let dir = tempfile::tempdir().unwrap();
        let out = [sample()];
        let files = emit_outputs(&out, dir.path(), "h", &[Format::Csv, Format::Json]).unwrap();
        assert_eq!(files.len(), 3);
        assert!(files.iter().all(|f| f.extension().unwrap() != "svg"));
        let files = emit_outputs(&out, dir.path(), "h2", &[Format::Csv, Format::Json, Format::Svg]).unwrap();
        assert_eq!(files.len(), 4);
        let svg = fs::read_to_string(dir.path().join("h2/demo/y_vs_t.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<path"));
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = emit_outputs(&[sample()], &blocker, "h", &[Format::Csv]).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
