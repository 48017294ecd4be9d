//! Minimal self-contained SVG writer for decay plots: a log-linear panel
//! (straight lines are exponential laws) beside a log-log panel (straight
//! lines are power laws), with optional fitted-law overlays.

use crate::decay::{DecayFit, DecayModel};
use std::fmt::Write as _;

/// One energy history to draw.
pub struct PlotSeries {
    pub label: String,
    /// `(t, E)` samples; nonpositive values are skipped on log axes.
    pub points: Vec<(f64, f64)>,
}

/// A fitted law to overlay, labeled by the series it belongs to.
pub struct FitOverlay {
    pub label: String,
    pub fit: DecayFit,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Panel {
    x0: f64,
    y0: f64,
    width: f64,
    height: f64,
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Panel {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let fx = (x - self.x_lo) / (self.x_hi - self.x_lo);
        let fy = (y - self.y_lo) / (self.y_hi - self.y_lo);
        (self.x0 + fx * self.width, self.y0 + (1.0 - fy) * self.height)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        return format!("{v:.1e}");
    }
    let mut s = format!("{v:.3}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn draw_frame(svg: &mut String, p: &Panel, x_label: &str, y_label: &str) {
    let _ = write!(
        svg,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333" stroke-width="1"/>"##,
        p.x0, p.y0, p.width, p.height
    );
    for k in 0..=4 {
        let fx = k as f64 / 4.0;
        let x = p.x_lo + fx * (p.x_hi - p.x_lo);
        let (px, _) = p.map(x, p.y_lo);
        let _ = write!(
            svg,
            r##"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{:.1}" stroke="#ccc" stroke-width="0.5"/>"##,
            p.y0,
            p.y0 + p.height
        );
        let _ = write!(
            svg,
            r##"<text x="{px:.1}" y="{:.1}" font-size="11" text-anchor="middle" fill="#333">{}</text>"##,
            p.y0 + p.height + 16.0,
            tick_label(x)
        );
        let y = p.y_lo + fx * (p.y_hi - p.y_lo);
        let (_, py) = p.map(p.x_lo, y);
        let _ = write!(
            svg,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ccc" stroke-width="0.5"/>"##,
            p.x0,
            p.x0 + p.width
        );
        let _ = write!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end" fill="#333">{}</text>"##,
            p.x0 - 6.0,
            py + 4.0,
            tick_label(y)
        );
    }
    let _ = write!(
        svg,
        r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" fill="#000">{x_label}</text>"##,
        p.x0 + p.width / 2.0,
        p.y0 + p.height + 34.0
    );
    let cy = p.y0 + p.height / 2.0;
    let cx = p.x0 - 46.0;
    let _ = write!(
        svg,
        r##"<text x="{cx:.1}" y="{cy:.1}" font-size="12" text-anchor="middle" fill="#000" transform="rotate(-90 {cx:.1} {cy:.1})">{y_label}</text>"##,
    );
}

fn draw_polyline(svg: &mut String, p: &Panel, pts: &[(f64, f64)], color: &str, dashed: bool) {
    if pts.len() < 2 {
        return;
    }
    let mut path = String::new();
    for (x, y) in pts {
        let (px, py) = p.map(*x, *y);
        let _ = write!(path, "{px:.2},{py:.2} ");
    }
    let dash = if dashed { r##" stroke-dasharray="6 4""## } else { "" };
    let _ = write!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"##,
        path.trim_end()
    );
}

fn finite_bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo > hi {
        return None;
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    Some((lo, hi))
}

/// Render the two-panel decay plot. Energies at or below `floor` are
/// dropped from the log axes; the log-log panel additionally drops `t <= 0`.
pub fn decay_plot(
    title: &str,
    series: &[PlotSeries],
    fits: &[FitOverlay],
    floor: f64,
) -> String {
    let log_linear: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|(_, e)| *e > floor)
                .map(|(t, e)| (*t, e.log10()))
                .collect()
        })
        .collect();
    let log_log: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|(t, e)| *e > floor && *t > 0.0)
                .map(|(t, e)| (t.log10(), e.log10()))
                .collect()
        })
        .collect();

    let mut svg = String::new();
    let _ = write!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="980" height="480" viewBox="0 0 980 480">"##
    );
    svg.push_str(r##"<rect width="980" height="480" fill="white"/>"##);
    let _ = write!(
        svg,
        r##"<text x="490" y="24" font-size="15" text-anchor="middle" fill="#000">{title}</text>"##
    );

    for (panel_idx, data) in [&log_linear, &log_log].into_iter().enumerate() {
        let x0 = 70.0 + panel_idx as f64 * 480.0;
        let Some((x_lo, x_hi)) =
            finite_bounds(data.iter().flatten().map(|(x, _)| *x))
        else {
            continue;
        };
        let Some((y_lo, y_hi)) =
            finite_bounds(data.iter().flatten().map(|(_, y)| *y))
        else {
            continue;
        };
        let panel = Panel {
            x0,
            y0: 50.0,
            width: 380.0,
            height: 340.0,
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        };
        let (x_label, y_label) = if panel_idx == 0 {
            ("t", "log10 E")
        } else {
            ("log10 t", "log10 E")
        };
        draw_frame(&mut svg, &panel, x_label, y_label);
        for (s_idx, pts) in data.iter().enumerate() {
            draw_polyline(
                &mut svg,
                &panel,
                pts,
                PALETTE[s_idx % PALETTE.len()],
                false,
            );
        }
        // Overlay each fitted law on the panel where it is a straight line.
        for overlay in fits {
            let f = &overlay.fit;
            let (t0, t1) = f.window;
            if t1 <= t0 {
                continue;
            }
            let ln10 = std::f64::consts::LN_10;
            let line: Option<[(f64, f64); 2]> = match (f.model, panel_idx) {
                (DecayModel::Exponential, 0) => {
                    let y = |t: f64| (f.prefactor.max(floor).ln() - f.rate * t) / ln10;
                    Some([(t0, y(t0)), (t1, y(t1))])
                }
                (DecayModel::Polynomial, 1) if t0 > 0.0 => {
                    let y = |t: f64| {
                        (f.prefactor.max(floor).ln() - f.rate * t.ln()) / ln10
                    };
                    Some([(t0.log10(), y(t0)), (t1.log10(), y(t1))])
                }
                _ => None,
            };
            if let Some(seg) = line {
                draw_polyline(&mut svg, &panel, &seg, "#000", true);
            }
        }
    }

    // Legend.
    for (s_idx, s) in series.iter().enumerate() {
        let y = 415.0 + 16.0 * s_idx as f64;
        let color = PALETTE[s_idx % PALETTE.len()];
        let _ = write!(
            svg,
            r##"<line x1="70" y1="{y:.1}" x2="100" y2="{y:.1}" stroke="{color}" stroke-width="1.5"/>"##
        );
        let _ = write!(
            svg,
            r##"<text x="108" y="{:.1}" font-size="12" fill="#000">{}</text>"##,
            y + 4.0,
            s.label
        );
    }
    for (f_idx, overlay) in fits.iter().enumerate() {
        let y = 415.0 + 16.0 * f_idx as f64;
        let _ = write!(
            svg,
            r##"<line x1="490" y1="{y:.1}" x2="520" y2="{y:.1}" stroke="#000" stroke-width="1.5" stroke-dasharray="6 4"/>"##
        );
        let model = match overlay.fit.model {
            DecayModel::Exponential => format!("exponential, rate {:.4}", overlay.fit.rate),
            DecayModel::Polynomial => format!("polynomial, exponent {:.3}", overlay.fit.rate),
            DecayModel::Extinct => "extinct".into(),
            DecayModel::Inconclusive => "inconclusive".into(),
        };
        let _ = write!(
            svg,
            r##"<text x="528" y="{:.1}" font-size="12" fill="#000">{}: {model}</text>"##,
            y + 4.0,
            overlay.label
        );
    }
    svg.push_str("</svg>");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn produces_well_formed_svg_with_both_panels() {
        let series = vec![PlotSeries {
            label: "a=2".into(),
            points: (0..50)
                .map(|k| {
                    let t = k as f64;
                    (t, 3.0 * (-0.2 * t).exp())
                })
                .collect(),
        }];
        let fits = vec![FitOverlay {
            label: "a=2".into(),
            fit: DecayFit {
                model: DecayModel::Exponential,
                rate: 0.2,
                prefactor: 3.0,
                window: (5.0, 45.0),
                r_squared: 1.0,
                residual_rms: 0.0,
            },
        }];
        let svg = decay_plot("test", &series, &fits, 1e-30);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 3, "background + two frames");
        assert!(svg.matches("<polyline").count() >= 3, "two curves + overlay");
        assert!(svg.contains("exponential, rate 0.2000"));
        // Zero-energy series must not break the log panels.
        let silent = vec![PlotSeries {
            label: "quiet".into(),
            points: vec![(0.0, 0.0), (1.0, 0.0)],
        }];
        let svg = decay_plot("silent", &silent, &[], 1e-30);
        assert!(svg.ends_with("</svg>"));
    }
}
