//! Minimal risk/return scatter plots. Each point carries its `frontier.csv`
//! row and exact coordinates as data attributes.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const MARGIN: f64 = 64.0;
const TICKS: usize = 5;

pub const BLUE: &str = "#1f4fd6";
pub const RED: &str = "#d62728";
pub const GRAY: &str = "#7f7f7f";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    /// Data row in `frontier.csv`, when the point comes from one.
    pub row: Option<usize>,
    pub s: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub id: &'static str,
    pub color: &'static str,
    pub radius: f64,
    pub points: Vec<Point>,
}

pub struct Figure<'a> {
    pub title: &'a str,
    pub series: Vec<Series>,
    /// Highlighted portfolio drawn as a ring with `id="sp"`.
    pub marker: Option<Point>,
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Self { lo: 0.0, hi: 1.0 };
        }
        lo = lo.min(0.0);
        let span = if hi > lo { hi - lo } else { 1.0 };
        Self {
            lo,
            hi: hi + 0.05 * span,
        }
    }

    fn map(&self, v: f64, from: f64, to: f64) -> f64 {
        from + (v - self.lo) / (self.hi - self.lo) * (to - from)
    }
}

fn circle(out: &mut String, p: &Point, x: f64, y: f64, r: f64, fill: &str) {
    let _ = write!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}" data-s="{}" data-rho="{}""#, p.s, p.rho);
    if let Some(row) = p.row {
        let _ = write!(out, r#" data-row="{row}""#);
    }
    out.push_str("/>\n");
}

pub fn render(fig: &Figure) -> String {
    let all = || fig.series.iter().flat_map(|s| s.points.iter()).chain(fig.marker.iter());
    let xa = Axis::fit(all().map(|p| p.s));
    let ya = Axis::fit(all().map(|p| p.rho));
    let (x0, x1) = (MARGIN, WIDTH - MARGIN / 2.0);
    let (y0, y1) = (HEIGHT - MARGIN, MARGIN / 2.0);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, "<title>{}</title>", fig.title);
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<g id="axes" stroke="black" fill="none">"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    out.push_str("</g>\n<g id=\"ticks\">\n");
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = xa.lo + f * (xa.hi - xa.lo);
        let yv = ya.lo + f * (ya.hi - ya.lo);
        let xp = xa.map(xv, x0, x1);
        let yp = ya.map(yv, y0, y1);
        let _ = writeln!(out, r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{xv:.3e}</text>"#, y0 + 18.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{yp:.2}" text-anchor="end">{yv:.3e}</text>"#, x0 - 6.0);
    }
    out.push_str("</g>\n");
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">risk s</text>"#, (x0 + x1) / 2.0, HEIGHT - 16.0);
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">return rho</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    for s in &fig.series {
        let _ = writeln!(out, r#"<g id="{}" data-count="{}">"#, s.id, s.points.len());
        for p in &s.points {
            circle(&mut out, p, xa.map(p.s, x0, x1), ya.map(p.rho, y0, y1), s.radius, s.color);
        }
        out.push_str("</g>\n");
    }
    if let Some(p) = &fig.marker {
        let (x, y) = (xa.map(p.s, x0, x1), ya.map(p.rho, y0, y1));
        let _ = write!(
            out,
            r#"<circle id="sp" cx="{x:.2}" cy="{y:.2}" r="7" fill="none" stroke="black" stroke-width="2" data-s="{}" data-rho="{}""#,
            p.s, p.rho
        );
        if let Some(row) = p.row {
            let _ = write!(out, r#" data-row="{row}""#);
        }
        out.push_str("/>\n");
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">SP</text>"#, x + 9.0, y - 9.0);
    }
    out.push_str("</svg>\n");
    out
}
