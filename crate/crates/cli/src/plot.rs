//! Static SVG figures: a time-series overlay and a parity scatter.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 50.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    w: f64,
    h: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (self.w - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        self.h - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (self.h - 2.0 * MARGIN)
    }

    fn axes(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (w, h) = (self.w, self.h);
        let _ = writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - 2.0 * MARGIN,
            h - 2.0 * MARGIN
        );
        let _ = writeln!(svg, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, w / 2.0, h - 12.0, escape(xlabel));
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            escape(ylabel)
        );
        for (v, anchor, x, y) in [
            (self.x.0, "start", MARGIN, h - MARGIN + 14.0),
            (self.x.1, "end", w - MARGIN, h - MARGIN + 14.0),
        ] {
            let _ = writeln!(svg, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{v:.2}</text>"#);
        }
        for (v, y) in [(self.y.0, h - MARGIN), (self.y.1, MARGIN + 10.0)] {
            let _ = writeln!(svg, r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.2}</text>"#, MARGIN - 4.0);
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn document(body: String) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n{body}</svg>\n"
    )
}

/// Displacement histories sharing one time axis.
pub fn overlay(title: &str, t: &[f64], series: &[Series]) -> String {
    let frame = Frame {
        x: bounds(t.iter()),
        y: bounds(series.iter().flat_map(|s| s.values.iter())),
        w: WIDTH,
        h: HEIGHT,
    };
    let mut svg = String::new();
    frame.axes(&mut svg, title, "time (s)", "displacement (mm)");
    for (k, s) in series.iter().enumerate() {
        let points: Vec<String> = t
            .iter()
            .zip(s.values)
            .map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
            s.color,
            points.join(" ")
        );
        let ly = MARGIN + 14.0 + 14.0 * k as f64;
        let lx = WIDTH - MARGIN - 150.0;
        let _ = writeln!(svg, r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{}"/>"#, ly - 4.0, lx + 20.0, ly - 4.0, s.color);
        let _ = writeln!(svg, r#"<text x="{}" y="{ly}" font-size="11">{}</text>"#, lx + 26.0, escape(s.label));
    }
    document(svg)
}

/// Prediction against reference with the identity line.
pub fn parity(title: &str, pred: &[f64], reference: &[f64]) -> String {
    let b = bounds(pred.iter().chain(reference));
    let frame = Frame {
        x: b,
        y: b,
        w: WIDTH,
        h: HEIGHT,
    };
    let mut svg = String::new();
    frame.axes(&mut svg, title, "reference (mm)", "prediction (mm)");
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        frame.px(b.0),
        frame.py(b.0),
        frame.px(b.1),
        frame.py(b.1)
    );
    for (r, p) in reference.iter().zip(pred) {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="steelblue"/>"#, frame.px(*r), frame.py(*p));
    }
    document(svg)
}
