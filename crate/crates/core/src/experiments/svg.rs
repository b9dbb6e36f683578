//! Minimal standalone log-log line charts.

use std::fmt::Write;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 60.0); // left, right, top, bottom
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// A dashed reference line `y = anchor.1 (x / anchor.0)^slope`.
#[derive(Debug, Clone, PartialEq)]
pub struct Guide {
    pub label: String,
    pub slope: f64,
    pub anchor: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub guides: Vec<Guide>,
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        let t = (x.log10() - self.x.0) / (self.x.1 - self.x.0);
        MARGIN.0 + t * (WIDTH - MARGIN.0 - MARGIN.1)
    }

    fn py(&self, y: f64) -> f64 {
        let t = (y.log10() - self.y.0) / (self.y.1 - self.y.0);
        HEIGHT - MARGIN.3 - t * (HEIGHT - MARGIN.2 - MARGIN.3)
    }
}

/// Whole decades covering `values`, at least one decade wide.
fn decade_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.log10()), hi.max(v.log10())));
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render `chart`; the output depends only on the input.
///
/// Non-positive coordinates cannot be drawn on log axes and are dropped.
pub fn render_svg(chart: &Chart) -> Result<String> {
    let series: Vec<Series> = chart
        .series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            points: s.points.iter().copied().filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()).collect(),
        })
        .collect();
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Config("nothing to plot: every series is empty".into()));
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    let axes = Axes { x: decade_range(all().map(|p| p.0)), y: decade_range(all().map(|p| p.1)) };

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(w, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&chart.title));

    // frame, decade ticks and grid
    let (x0, x1) = (MARGIN.0, WIDTH - MARGIN.1);
    let (y0, y1) = (HEIGHT - MARGIN.3, MARGIN.2);
    let _ = writeln!(w, r##"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##, x1 - x0, y0 - y1);
    for d in axes.x.0 as i32..=axes.x.1 as i32 {
        let x = axes.px(10f64.powi(d));
        let _ = writeln!(w, r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{y1:.1}" stroke="#ddd"/>"##);
        let _ = writeln!(w, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"#, y0 + 18.0);
    }
    for d in axes.y.0 as i32..=axes.y.1 as i32 {
        let y = axes.py(10f64.powi(d));
        let _ = writeln!(w, r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#ddd"/>"##);
        let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#, x0 - 6.0, y + 4.0);
    }
    let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 18.0, escape(&chart.x_label));
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&chart.y_label)
    );

    let _ = writeln!(w, r#"<clipPath id="plot"><rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}"/></clipPath>"#, x1 - x0, y0 - y1);
    let (xa, xb) = (10f64.powf(axes.x.0), 10f64.powf(axes.x.1));
    for g in &chart.guides {
        let at = |x: f64| g.anchor.1 * (x / g.anchor.0).powf(g.slope);
        let _ = writeln!(
            w,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#555" stroke-dasharray="6 4" clip-path="url(#plot)"/>"##,
            axes.px(xa),
            axes.py(at(xa)),
            axes.px(xb),
            axes.py(at(xb))
        );
    }

    let mut legend_y = y1 + 16.0;
    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s.points.iter().map(|(x, y)| format!("{:.1},{:.1}", axes.px(*x), axes.py(*y))).collect();
        if s.points.len() > 1 {
            let _ = writeln!(w, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
        }
        for (x, y) in &s.points {
            let _ = writeln!(w, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, axes.px(*x), axes.py(*y));
        }
        let _ = writeln!(w, r#"<line x1="{:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="{color}" stroke-width="2"/>"#, x1 - 150.0, x1 - 130.0);
        let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x1 - 125.0, legend_y + 4.0, escape(&s.label));
        legend_y += 16.0;
    }
    for g in &chart.guides {
        let _ = writeln!(w, r##"<line x1="{:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="#555" stroke-dasharray="6 4"/>"##, x1 - 150.0, x1 - 130.0);
        let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x1 - 125.0, legend_y + 4.0, escape(&g.label));
        legend_y += 16.0;
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg(chart: &Chart, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, render_svg(chart)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(series: Vec<Series>) -> Chart {
        Chart { title: "t".into(), x_label: "m".into(), y_label: "error".into(), series, guides: vec![] }
    }

    #[test]
    fn single_point() {
        let svg = render_svg(&chart(vec![Series { label: "a".into(), points: vec![(4.0, 0.1)] }])).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn two_series_with_legend_and_guide() {
        let mut c = chart(vec![
            Series { label: "k=5".into(), points: vec![(4.0, 0.1), (8.0, 0.05)] },
            Series { label: "k=6".into(), points: vec![(4.0, 0.11), (8.0, 0.06)] },
        ]);
        c.guides.push(Guide { label: "m^-1/2".into(), slope: -0.5, anchor: (4.0, 0.1) });
        let svg = render_svg(&c).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">k=5<") && svg.contains(">k=6<") && svg.contains(">m^-1/2<"));
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert_eq!(svg, render_svg(&c).unwrap());
    }

    #[test]
    fn empty_is_rejected() {
        assert!(render_svg(&chart(vec![])).is_err());
        assert!(render_svg(&chart(vec![Series { label: "z".into(), points: vec![(0.0, 1.0)] }])).is_err());
    }
}
