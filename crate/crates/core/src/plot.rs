//! Plain SVG output for the survival curve and ROC plots.

use std::fmt::Write;

use crate::evaluate::RocCurve;
use crate::survival::{KmCurve, FIVE_YEARS_DAYS};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

struct Frame {
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN + v / self.x_max * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - v / self.y_max * (HEIGHT - 2.0 * MARGIN)
    }

    fn open(&self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (x0, x1, y0, y1) = (self.x(0.0), self.x(self.x_max), self.y(0.0), self.y(self.y_max));
        let _ = writeln!(s, r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#);
        let _ = writeln!(s, r#"<text x="{:.2}" y="20" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{y_label}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0
        );
        for (v, anchor) in [(0.0, "start"), (self.x_max, "end")] {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#, self.x(v), y0 + 16.0, fmt_tick(v));
        }
        for v in [0.0, self.y_max] {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 6.0, self.y(v) + 4.0, fmt_tick(v));
        }
        s
    }
}

fn fmt_tick(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Step plot of the Kaplan-Meier CDF with the five-year value marked in red.
pub fn km_svg(curve: &KmCurve) -> String {
    let last = curve.event_times().last().copied().unwrap_or(0.0);
    let frame = Frame { x_max: last.max(FIVE_YEARS_DAYS) * 1.05, y_max: 1.0 };
    let mut s = frame.open("Kaplan-Meier CDF", "survival time (days)", "P(ST <= t)");

    let mut d = format!("M{:.2},{:.2}", frame.x(0.0), frame.y(0.0));
    let mut level = 0.0;
    for (&t, &c) in curve.event_times().iter().zip(curve.cdf_values()) {
        let _ = write!(d, " L{:.2},{:.2} L{:.2},{:.2}", frame.x(t), frame.y(level), frame.x(t), frame.y(c));
        level = c;
    }
    let _ = write!(d, " L{:.2},{:.2}", frame.x(frame.x_max), frame.y(level));
    let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#);

    let five = curve.cdf_at(FIVE_YEARS_DAYS).unwrap_or(level);
    let (px, py) = (frame.x(FIVE_YEARS_DAYS), frame.y(five));
    let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="4" fill="red"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" fill="red">P(ST &lt;= 5y) = {five:.2}</text>"#, px + 8.0, py - 8.0);
    s.push_str("</svg>\n");
    s
}

/// ROC polyline against the chance diagonal.
pub fn roc_svg(curve: &RocCurve) -> String {
    let frame = Frame { x_max: 1.0, y_max: 1.0 };
    let mut s = frame.open(&format!("ROC (AUC = {:.3})", curve.auc), "false positive rate", "true positive rate");
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
        frame.x(0.0),
        frame.y(0.0),
        frame.x(1.0),
        frame.y(1.0)
    );
    let points: Vec<String> = curve.points.iter().map(|&(f, t)| format!("{:.2},{:.2}", frame.x(f), frame.y(t))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, points.join(" "));
    s.push_str("</svg>\n");
    s
}
