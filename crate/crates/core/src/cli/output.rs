//! Flat-file writers: CSV with 17 significant digits and LF endings, pretty
//! JSON summaries, and minimal self-contained SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

pub enum Cell {
    F(f64),
    U(usize),
    I(i64),
    B(bool),
    S(String),
}

impl Cell {
    fn render(&self, out: &mut String) {
        match self {
            Cell::F(x) => fmt_f64(*x, out),
            Cell::U(x) => write!(out, "{x}").unwrap(),
            Cell::I(x) => write!(out, "{x}").unwrap(),
            Cell::B(x) => out.push_str(if *x { "true" } else { "false" }),
            Cell::S(s) => out.push_str(s),
        }
    }
}

/// Scientific notation with 16 digits after the point, which round-trips
/// every finite double.
pub fn fmt_f64(x: f64, out: &mut String) {
    if x.is_nan() {
        out.push_str("nan");
    } else if x.is_infinite() {
        out.push_str(if x > 0.0 { "inf" } else { "-inf" });
    } else {
        write!(out, "{x:.16e}").unwrap();
    }
}

pub struct Csv {
    buf: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf, width: header.len() }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        debug_assert_eq!(cells.len(), self.width);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            c.render(&mut self.buf);
        }
        self.buf.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.buf.as_bytes())?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Output directory plus a record of every file written, in order.
pub struct OutDir {
    root: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn csv(&mut self, name: &str, csv: &Csv) -> Result<()> {
        let p = self.root.join(name);
        csv.write(&p)?;
        self.written.push(p);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.root.join(name);
        write_json(&p, value)?;
        self.written.push(p);
        Ok(())
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.root.join(name);
        std::fs::write(&p, text)?;
        self.written.push(p);
        Ok(())
    }
}

/// Energy and time scale of one run. Emitted energies are `E/γ` and times
/// `tγ`; the Hermitian limit `γ = 0` falls back to the raw unit.
#[derive(Debug, Clone, Copy)]
pub struct Units {
    pub energy: f64,
    pub label: &'static str,
}

impl Units {
    pub fn for_gamma(gamma: f64) -> Self {
        if gamma > 0.0 {
            Units { energy: gamma, label: "gamma" }
        } else {
            Units { energy: 1.0, label: "abs" }
        }
    }

    pub fn e(&self, x: f64) -> f64 {
        x / self.energy
    }

    pub fn t(&self, x: f64) -> f64 {
        x * self.energy
    }

    pub fn col(&self, name: &str) -> String {
        format!("{name} [{}]", self.label)
    }

    pub fn time_col(&self, name: &str) -> String {
        if self.label == "gamma" {
            format!("{name} [1/gamma]")
        } else {
            format!("{name} [abs]")
        }
    }
}

pub enum Style {
    Line,
    Dots,
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#000000", "#9467bd", "#ff7f0e"];

/// A 640×420 scatter/line plot with axis ticks at the data bounds.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-300 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-300 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" font-size="15" text-anchor="middle" font-family="sans-serif">{}</text>"#, w / 2.0, esc(title)).unwrap();
    writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    )
    .unwrap();
    let tick = |v: f64| format!("{v:.3}");
    writeln!(s, r#"<text x="{m}" y="{}" font-size="11" font-family="sans-serif">{}</text>"#, h - m + 16.0, tick(x0)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end" font-family="sans-serif">{}</text>"#, w - m, h - m + 16.0, tick(x1)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end" font-family="sans-serif">{}</text>"#, m - 4.0, h - m, tick(y0)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end" font-family="sans-serif">{}</text>"#, m - 4.0, m + 10.0, tick(y1)).unwrap();
    writeln!(s, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle" font-family="sans-serif">{}</text>"#, w / 2.0, h - 18.0, esc(x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{}" font-size="13" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        esc(y_label)
    )
    .unwrap();
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let finite: Vec<(f64, f64)> = ser.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        match ser.style {
            Style::Line => {
                let mut d = String::new();
                for (j, (x, y)) in finite.iter().enumerate() {
                    write!(d, "{}{:.2},{:.2}", if j == 0 { "M" } else { " L" }, sx(*x), sy(*y)).unwrap();
                }
                writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.3"/>"#).unwrap();
            }
            Style::Dots => {
                for (x, y) in &finite {
                    writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1.6" fill="{color}"/>"#, sx(*x), sy(*y)).unwrap();
                }
            }
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}" font-family="sans-serif">{}</text>"#,
            w - m + 4.0,
            m + 14.0 * (i as f64 + 1.0),
            esc(&ser.label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
