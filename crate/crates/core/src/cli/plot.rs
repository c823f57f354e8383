//! Minimal standalone SVG line and stem plots.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Log-scaled x and y axes.
    ErrorVsIterLogLog,
    /// Linear axes.
    RatioVsIter,
    /// One stem panel per series, stacked vertically.
    SignalStem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }

    /// `(index + 1, value)` pairs.
    pub fn indexed(label: impl Into<String>, values: &[f64]) -> Self {
        Self::new(
            label,
            values
                .iter()
                .enumerate()
                .map(|(i, v)| ((i + 1) as f64, *v))
                .collect(),
        )
    }
}

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Some(Axis { lo, hi, log })
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.floor() as i32, self.hi.ceil() as i32);
            let step = ((b - a) / 6).max(1);
            (a..=b)
                .step_by(step as usize)
                .map(|e| 10f64.powi(e))
                .filter(|v| {
                    let f = self.frac(*v);
                    (-1e-9..=1.0 + 1e-9).contains(&f)
                })
                .map(|v| (v, format!("{v:.0e}")))
                .collect()
        } else {
            (0..=5)
                .map(|i| {
                    let v = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
                    (v, format!("{v:.3}"))
                })
                .collect()
        }
    }
}

struct Panel {
    top: f64,
    x: Axis,
    y: Axis,
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        MARGIN_L + self.x.frac(x) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        let h = PANEL_HEIGHT - MARGIN_T - MARGIN_B;
        self.top + MARGIN_T + (1.0 - self.y.frac(y)) * h
    }

    fn frame(&self, svg: &mut String, title: &str) {
        let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
        let (y0, y1) = (self.top + MARGIN_T, self.top + PANEL_HEIGHT - MARGIN_B);
        let _ = writeln!(
            svg,
            r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#000"/>"##,
            x1 - x0,
            y1 - y0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            self.top + 18.0,
            escape(title)
        );
        for (v, label) in self.x.ticks() {
            let px = self.px(v);
            let _ = writeln!(
                svg,
                r##"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{}" stroke="#000"/><text x="{px:.2}" y="{}" text-anchor="middle" font-size="11">{label}</text>"##,
                y1 + 5.0,
                y1 + 18.0
            );
        }
        for (v, label) in self.y.ticks() {
            let py = self.py(v);
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="#000"/><text x="{}" y="{:.2}" text-anchor="end" font-size="11">{label}</text>"##,
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0
            );
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders `series` as an SVG document.
pub fn render_svg(series: &[Series], kind: PlotKind, title: &str) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::input("plot needs a nonempty series"));
    }
    let log = kind == PlotKind::ErrorVsIterLogLog;
    let keep =
        |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite() && (!log || (p.0 > 0.0 && p.1 > 0.0));
    let panels = if kind == PlotKind::SignalStem {
        series.len()
    } else {
        1
    };
    let height = PANEL_HEIGHT * panels as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#fff"/>"##);

    match kind {
        PlotKind::SignalStem => {
            for (i, s) in series.iter().enumerate() {
                let pts: Vec<&(f64, f64)> = s.points.iter().filter(keep).collect();
                let x = Axis::fit(pts.iter().map(|p| p.0), false);
                let y = Axis::fit(pts.iter().map(|p| p.1).chain([0.0]), false);
                let (Some(x), Some(y)) = (x, y) else { continue };
                let panel = Panel {
                    top: PANEL_HEIGHT * i as f64,
                    x,
                    y,
                };
                panel.frame(&mut svg, &format!("{title}: {}", s.label));
                let color = COLORS[i % COLORS.len()];
                let base = panel.py(0.0);
                let _ = writeln!(svg, r#"<g stroke="{color}" fill="{color}">"#);
                for p in pts {
                    let (px, py) = (panel.px(p.0), panel.py(p.1));
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{px:.2}" y1="{base:.2}" x2="{px:.2}" y2="{py:.2}"/><circle cx="{px:.2}" cy="{py:.2}" r="2"/>"#
                    );
                }
                let _ = writeln!(svg, "</g>");
            }
        }
        _ => {
            let all = || series.iter().flat_map(|s| s.points.iter().filter(keep));
            let x = Axis::fit(all().map(|p| p.0), log);
            let y = Axis::fit(all().map(|p| p.1), log);
            let (Some(x), Some(y)) = (x, y) else {
                return Err(Error::input("plot has no drawable points"));
            };
            let panel = Panel { top: 0.0, x, y };
            panel.frame(&mut svg, title);
            for (i, s) in series.iter().enumerate() {
                let color = COLORS[i % COLORS.len()];
                let coords: Vec<String> = s
                    .points
                    .iter()
                    .filter(keep)
                    .map(|p| format!("{:.2},{:.2}", panel.px(p.0), panel.py(p.1)))
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                );
                let _ = writeln!(
                    svg,
                    r#"<text x="{}" y="{}" font-size="12" fill="{color}">{}</text>"#,
                    WIDTH - MARGIN_R - 150.0,
                    MARGIN_T + 18.0 * (i + 1) as f64,
                    escape(&s.label)
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_svg_plot(series: &[Series], kind: PlotKind, title: &str, path: &Path) -> Result<()> {
    let svg = render_svg(series, kind, title)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_series_rejected() {
        assert!(render_svg(&[], PlotKind::RatioVsIter, "t").is_err());
        assert!(render_svg(&[Series::new("a", vec![])], PlotKind::RatioVsIter, "t").is_err());
    }

    #[test]
    fn line_plot_has_one_polyline_per_series() {
        let s = vec![
            Series::indexed("mse", &[1.0, 0.1, 0.01]),
            Series::indexed("other", &[0.5, 0.05, 0.005]),
        ];
        let svg = render_svg(&s, PlotKind::ErrorVsIterLogLog, "Error").unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("1e-2"));
    }

    #[test]
    fn log_plot_drops_nonpositive() {
        let s = vec![Series::indexed("mse", &[1.0, 0.0, 0.01])];
        let svg = render_svg(&s, PlotKind::ErrorVsIterLogLog, "Error").unwrap();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn stem_plot_has_two_panels() {
        let s = vec![
            Series::indexed("original", &[0.0, 1.0, -1.0, 0.0]),
            Series::indexed("recovered", &[0.01, 0.98, -1.01, 0.0]),
        ];
        let svg = render_svg(&s, PlotKind::SignalStem, "Signal").unwrap();
        assert_eq!(svg.matches("<circle").count(), 8);
        assert_eq!(svg.matches("<rect x=").count(), 2);
    }
}
