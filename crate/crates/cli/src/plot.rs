//! Static SVG plots of a piecewise function with optional overlays at a point.

use std::fmt::Write;

use specular_core::piecewise::PiecewiseFunction;
use specular_core::specular1d::{phototangent, specular_tangent_line};
use specular_core::{Error, PointValue, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 40.0;
const FUNCTION_COLOR: &str = "#1f77b4";
const MARKER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub range: (f64, f64),
    /// Samples per segment, at least 2.
    pub samples: usize,
    /// Marked point for the phototangent and tangent-line overlays.
    pub at: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub svg: String,
    pub polylines: usize,
    pub open_markers: usize,
    pub closed_markers: usize,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn c(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

#[derive(Clone, Copy)]
enum Marker {
    Open,
    Closed,
}

fn validate(f: &PiecewiseFunction, spec: &PlotSpec) -> Result<()> {
    let (lo, hi) = spec.range;
    let dom = f.domain();
    if spec.samples < 2 {
        return Err(Error::InvalidArgument(format!("samples must be at least 2, got {}", spec.samples)));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidArgument(format!("invalid plot range [{lo}, {hi}]")));
    }
    if lo < dom.lo || hi > dom.hi {
        return Err(Error::InvalidArgument(format!(
            "plot range [{lo}, {hi}] leaves the domain [{}, {}]",
            dom.lo, dom.hi
        )));
    }
    if let Some(x0) = spec.at {
        if !(lo..=hi).contains(&x0) {
            return Err(Error::InvalidArgument(format!("marked point {x0} lies outside the plot range")));
        }
    }
    Ok(())
}

/// Renders `f` over `spec.range`: one polyline per segment, open markers at
/// one-sided limits that differ from the point value, closed markers at
/// defined breakpoint values, and at `spec.at` the phototangent and the
/// specular tangent line when they exist.
pub fn plot(f: &PiecewiseFunction, spec: &PlotSpec) -> Result<Plot> {
    validate(f, spec)?;
    let (lo, hi) = spec.range;

    let mut curves: Vec<Vec<(f64, f64)>> = Vec::new();
    for i in 0..f.segments().len() {
        let ext = f.extended_segment(i)?;
        let (a, b) = (ext.lo().max(lo), ext.hi().min(hi));
        if a >= b {
            continue;
        }
        let n = spec.samples - 1;
        let pts: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let x = if k == n { b } else { a + (b - a) * k as f64 / n as f64 };
                (x, ext.eval(x))
            })
            .filter(|p| p.1.is_finite())
            .collect();
        if pts.len() >= 2 {
            curves.push(pts);
        }
    }

    let mut markers: Vec<(f64, f64, Marker)> = Vec::new();
    for (k, &bp) in f.breakpoints().iter().enumerate() {
        if bp < lo || bp > hi {
            continue;
        }
        let value = match f.point_values()[k] {
            PointValue::Defined(v) => Some(v),
            _ => None,
        };
        let mut limits: Vec<f64> = Vec::new();
        for lim in [f.left_limit(bp), f.right_limit(bp)].into_iter().flatten() {
            let covered = value.is_some_and(|v| (lim - v).abs() <= MARKER_TOL * (1.0 + v.abs()));
            let repeated = limits.iter().any(|l| (lim - l).abs() <= MARKER_TOL * (1.0 + l.abs()));
            if lim.is_finite() && !covered && !repeated {
                limits.push(lim);
                markers.push((bp, lim, Marker::Open));
            }
        }
        if let Some(v) = value {
            markers.push((bp, v, Marker::Closed));
        }
    }

    let ys = curves.iter().flatten().map(|p| p.1).chain(markers.iter().map(|m| m.1));
    let (mut ylo, mut yhi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    if !ylo.is_finite() {
        (ylo, yhi) = (-1.0, 1.0);
    }
    if yhi - ylo < 1e-12 {
        (ylo, yhi) = (ylo - 1.0, yhi + 1.0);
    }
    let pad = 0.05 * (yhi - ylo);
    let frame = Frame { x: (lo, hi), y: (ylo - pad, yhi + pad) };

    let mut overlays: Vec<(&str, &str, Vec<(f64, f64)>)> = Vec::new();
    if let Some(x0) = spec.at {
        let w = 0.25 * (hi - lo);
        if let Ok(pt) = phototangent(f, x0) {
            let continuous = (pt.right_value - pt.left_value).abs() <= MARKER_TOL * (1.0 + pt.mid.abs());
            if continuous {
                overlays.push(("phototangent", "#d62728", vec![(x0 - w, pt.eval(x0 - w)), (x0, pt.mid), (x0 + w, pt.eval(x0 + w))]));
            } else {
                overlays.push(("phototangent", "#d62728", vec![(x0 - w, pt.eval(x0 - w)), (x0, pt.left_value)]));
                overlays.push(("phototangent", "#d62728", vec![(x0, pt.right_value), (x0 + w, pt.eval(x0 + w))]));
            }
        }
        if let Ok(line) = specular_tangent_line(f, x0) {
            overlays.push(("tangent", "#2ca02c", vec![(lo, line.eval(lo)), (hi, line.eval(hi))]));
        }
    }

    let mut svg = String::new();
    let pts = |p: &[(f64, f64)]| p.iter().map(|&(x, y)| format!("{},{}", c(frame.px(x)), c(frame.py(y)))).collect::<Vec<_>>().join(" ");
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600">"#);
    let _ = writeln!(
        svg,
        r#"<defs><clipPath id="plot-area"><rect x="{m}" y="{m}" width="{w}" height="{h}"/></clipPath></defs>"#,
        m = c(MARGIN),
        w = c(WIDTH - 2.0 * MARGIN),
        h = c(HEIGHT - 2.0 * MARGIN)
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="800" height="600" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{m}" y="{m}" width="{w}" height="{h}" fill="none" stroke="#cccccc"/>"##,
        m = c(MARGIN),
        w = c(WIDTH - 2.0 * MARGIN),
        h = c(HEIGHT - 2.0 * MARGIN)
    );
    if frame.y.0 < 0.0 && frame.y.1 > 0.0 {
        let y = c(frame.py(0.0));
        let _ = writeln!(svg, r##"<line class="axis" x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#999999"/>"##, c(MARGIN), c(WIDTH - MARGIN));
    }
    if lo < 0.0 && hi > 0.0 {
        let x = c(frame.px(0.0));
        let _ = writeln!(svg, r##"<line class="axis" x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#999999"/>"##, c(MARGIN), c(HEIGHT - MARGIN));
    }
    for curve in &curves {
        let _ = writeln!(
            svg,
            r#"<polyline class="function" fill="none" stroke="{FUNCTION_COLOR}" stroke-width="2" clip-path="url(#plot-area)" points="{}"/>"#,
            pts(curve)
        );
    }
    for (class, color, line) in &overlays {
        let dash = if *class == "phototangent" { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline class="{class}" fill="none" stroke="{color}" stroke-width="1.5"{dash} clip-path="url(#plot-area)" points="{}"/>"#,
            pts(line)
        );
    }
    for &(x, y, kind) in &markers {
        let (class, fill) = match kind {
            Marker::Open => ("open", "white"),
            Marker::Closed => ("closed", FUNCTION_COLOR),
        };
        let _ = writeln!(
            svg,
            r#"<circle class="{class}" cx="{}" cy="{}" r="4" fill="{fill}" stroke="{FUNCTION_COLOR}" stroke-width="1.5"/>"#,
            c(frame.px(x)),
            c(frame.py(y))
        );
    }
    svg.push_str("</svg>\n");

    let count = |m: fn(&Marker) -> bool| markers.iter().filter(|k| m(&k.2)).count();
    Ok(Plot {
        svg,
        polylines: curves.len() + overlays.len(),
        open_markers: count(|m| matches!(m, Marker::Open)),
        closed_markers: count(|m| matches!(m, Marker::Closed)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sgn() -> PiecewiseFunction {
        PiecewiseFunction::from_exprs(-1.0, 1.0, &[0.0], &["-1", "1"], &[(0.0, PointValue::Defined(0.0))]).unwrap()
    }

    fn spec(at: Option<f64>) -> PlotSpec {
        PlotSpec { range: (-1.0, 1.0), samples: 5, at }
    }

    #[test]
    fn sign_has_two_flat_pieces_and_markers() {
        let p = plot(&sgn(), &spec(None)).unwrap();
        assert_eq!(p.polylines, 2);
        assert_eq!((p.open_markers, p.closed_markers), (2, 1));
        for line in p.svg.lines().filter(|l| l.starts_with("<polyline")) {
            let pts = line.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
            let ys: Vec<&str> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap()).collect();
            assert!(ys.windows(2).all(|w| w[0] == w[1]), "{line}");
        }
    }

    #[test]
    fn jump_overlay_splits_phototangent() {
        let p = plot(&sgn(), &spec(Some(0.0))).unwrap();
        assert_eq!(p.svg.matches("class=\"phototangent\"").count(), 2);
        assert_eq!(p.svg.matches("class=\"tangent\"").count(), 0);
    }

    #[test]
    fn rejects_bad_specs() {
        let f = sgn();
        let bad = [
            PlotSpec { samples: 1, ..spec(None) },
            PlotSpec { range: (-2.0, 1.0), ..spec(None) },
            PlotSpec { range: (0.5, 0.5), ..spec(None) },
            PlotSpec { range: (-1.0, 0.0), ..spec(Some(0.5)) },
        ];
        for s in bad {
            assert!(matches!(plot(&f, &s), Err(Error::InvalidArgument(_))), "{s:?}");
        }
    }

    #[test]
    fn coordinates_are_rounded() {
        assert_eq!(c(-0.001), "0.00");
        assert_eq!(c(1.005_1), "1.01");
    }
}
