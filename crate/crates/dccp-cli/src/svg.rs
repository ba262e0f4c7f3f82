//! Tiny hand-rolled SVG figures for the example gallery.

use std::fmt::Write;

pub struct Canvas {
    body: String,
    width: f64,
    height: f64,
    /// World-to-pixel transform.
    sx: f64,
    sy: f64,
    ox: f64,
    oy: f64,
}

impl Canvas {
    /// Map world box [x0,x1] x [y0,y1] onto a pixel canvas (y up).
    pub fn new(width: f64, height: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> Canvas {
        let sx = width / (x1 - x0);
        let sy = height / (y1 - y0);
        Canvas { body: String::new(), width, height, sx, sy: -sy, ox: -x0 * sx, oy: height + y0 * sy }
    }

    fn px(&self, x: f64) -> f64 {
        self.sx * x + self.ox
    }

    fn py(&self, y: f64) -> f64 {
        self.sy * y + self.oy
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, stroke: &str, fill: &str) {
        writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" stroke="{}" fill="{}" stroke-width="1.5"/>"#,
            self.px(cx),
            self.py(cy),
            (r * self.sx).abs(),
            stroke,
            fill
        )
        .unwrap();
    }

    pub fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, stroke: &str, width: f64) {
        writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="{}"/>"#,
            self.px(x0),
            self.py(y0),
            self.px(x1),
            self.py(y1),
            stroke,
            width
        )
        .unwrap();
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], stroke: &str, width: f64) {
        let pts: Vec<String> =
            points.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{}"/>"#,
            pts.join(" "),
            stroke,
            width
        )
        .unwrap();
    }

    pub fn dot(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{}"/>"#,
            self.px(x),
            self.py(y),
            r,
            fill
        )
        .unwrap();
    }

    pub fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, stroke: &str) {
        writeln!(
            self.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" stroke="{}" fill="none" stroke-width="1.5"/>"#,
            self.px(x0),
            self.py(y1),
            (self.px(x1) - self.px(x0)).abs(),
            (self.py(y0) - self.py(y1)).abs(),
            stroke
        )
        .unwrap();
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str) {
        writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" font-family="sans-serif">{}</text>"#,
            self.px(x),
            self.py(y),
            s
        )
        .unwrap();
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }
}

/// Simple x-y curve plot with axes and optional reference lines.
pub fn curve_plot(
    title: &str,
    series: &[(&str, &str, Vec<(f64, f64)>)],
    hlines: &[(f64, &str)],
) -> String {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.2.iter().copied()).collect();
    if all.is_empty() {
        return Canvas::new(420.0, 300.0, 0.0, 1.0, 0.0, 1.0).finish();
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    for &(y, _) in hlines {
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if (x1 - x0).abs() < 1e-12 {
        x1 = x0 + 1.0;
    }
    let pad = 0.08 * (y1 - y0).max(1e-9);
    let mut c = Canvas::new(420.0, 300.0, x0 - 0.05 * (x1 - x0), x1 + 0.05 * (x1 - x0), y0 - pad, y1 + pad);
    c.line(x0, y0, x1, y0, "#888", 1.0);
    c.line(x0, y0, x0, y1, "#888", 1.0);
    for &(y, color) in hlines {
        c.line(x0, y, x1, y, color, 1.0);
    }
    for (_, color, pts) in series {
        c.polyline(pts, color, 1.5);
        for &(x, y) in pts {
            c.dot(x, y, 2.5, color);
        }
    }
    c.text(x0, y1 + pad * 0.2, title);
    c.finish()
}
