//! CSV dumps and minimal SVG line plots.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Figure {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_log: bool,
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

impl Figure {
    pub fn new(name: &str, title: &str, x_label: &str, y_label: &str, log_log: bool) -> Self {
        Self {
            name: name.into(),
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_log,
            series: Vec::new(),
        }
    }

    pub fn with(mut self, name: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series {
            name: name.into(),
            points,
        });
        self
    }

    /// Writes `<name>.csv` and `<name>.svg` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::write(dir.join(format!("{}.csv", self.name)), self.csv())?;
        fs::write(dir.join(format!("{}.svg", self.name)), self.svg())
    }

    fn csv(&self) -> String {
        let mut s = String::from("series,x,y\n");
        for se in &self.series {
            for (x, y) in &se.points {
                let _ = writeln!(s, "{},{x:e},{y:e}", se.name);
            }
        }
        s
    }

    fn transform(&self, (x, y): (f64, f64)) -> Option<(f64, f64)> {
        if self.log_log {
            (x > 0.0 && y > 0.0).then(|| (x.log10(), y.log10()))
        } else {
            (x.is_finite() && y.is_finite()).then_some((x, y))
        }
    }

    fn svg(&self) -> String {
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| s.points.iter().filter_map(|&p| self.transform(p)).collect())
            .collect();
        let all = pts.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
        let axis = |v: f64| {
            if self.log_log {
                format!("1e{v:.2}")
            } else {
                format!("{v:.3e}")
            }
        };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            esc(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<path d="M{m} {t} L{m} {b} L{r} {b}" fill="none" stroke="black"/>"#,
            m = MARGIN,
            t = MARGIN,
            b = H - MARGIN,
            r = W - MARGIN
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 15.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(&self.y_label)
        );
        for (v, anchor, x, y) in [
            (x0, "start", MARGIN, H - MARGIN + 16.0),
            (x1, "end", W - MARGIN, H - MARGIN + 16.0),
        ] {
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#,
                axis(v)
            );
        }
        for (v, y) in [(y0, H - MARGIN), (y1, MARGIN + 4.0)] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{y}" text-anchor="end">{}</text>"#,
                MARGIN - 4.0,
                axis(v)
            );
        }
        for (i, (se, p)) in self.series.iter().zip(&pts).enumerate() {
            let color = COLORS[i % COLORS.len()];
            if !p.is_empty() {
                let d: Vec<String> = p
                    .iter()
                    .enumerate()
                    .map(|(j, &(x, y))| {
                        format!(
                            "{}{:.2} {:.2}",
                            if j == 0 { 'M' } else { 'L' },
                            sx(x),
                            sy(y)
                        )
                    })
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    d.join(" ")
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                W - MARGIN - 150.0,
                MARGIN + 16.0 * i as f64,
                esc(&se.name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
