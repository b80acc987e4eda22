//! Deterministic SVG rendering of planar domains, arcs and decompositions.
//!
//! The canvas is 1000×1000 with the y axis pointing up. Colours:
//!
//! | element                | colour    |
//! |------------------------|-----------|
//! | domain boundary        | `#000000` |
//! | slits and punctures    | `#d62728` |
//! | arcs                   | `#1f77b4` |
//! | forward special points | `#2ca02c` |
//! | backward special points| `#9467bd` |
//! | maximal-distance point | `#ff7f0e` |

use std::fmt::Write as _;

use crate::domain::{Domain, Shape};
use crate::error::{QhError, Result};
use crate::geodesic::{DyadicDecomposition, SpecialPoint};
use crate::norm::Arc;

pub const CANVAS: f64 = 1000.0;
pub const BOUNDARY_COLOR: &str = "#000000";
pub const SLIT_COLOR: &str = "#d62728";
pub const ARC_COLOR: &str = "#1f77b4";
pub const FORWARD_COLOR: &str = "#2ca02c";
pub const BACKWARD_COLOR: &str = "#9467bd";
pub const W0_COLOR: &str = "#ff7f0e";

struct View {
    lo: [f64; 2],
    scale: f64,
}

impl View {
    fn px(&self, p: &[f64]) -> (f64, f64) {
        let margin = 50.0;
        let x = margin + (p[0] - self.lo[0]) * self.scale;
        let y = CANVAS - margin - (p[1] - self.lo[1]) * self.scale;
        (x, y)
    }
}

fn extent(dom: &Domain, arcs: &[Arc], decs: &[DyadicDecomposition]) -> ([f64; 2], [f64; 2]) {
    if let Some((lo, hi)) = dom.bounding_box() {
        return ([lo[0], lo[1]], [hi[0], hi[1]]);
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let all = arcs.iter().chain(decs.iter().map(|d| &d.arc));
    for a in all {
        for v in a.vertices() {
            for k in 0..2 {
                lo[k] = lo[k].min(v.coords()[k]);
                hi[k] = hi[k].max(v.coords()[k]);
            }
        }
    }
    if !lo[0].is_finite() {
        return ([-1.0, -1.0], [1.0, 1.0]);
    }
    let pad = 0.25 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-3);
    ([lo[0] - pad, lo[1] - pad], [hi[0] + pad, hi[1] + pad])
}

fn shape_svg(out: &mut String, v: &View, shape: &Shape, lo: [f64; 2], hi: [f64; 2]) {
    match shape {
        Shape::Ball { center, radius } | Shape::PuncturedBall { center, radius, .. } => {
            let (cx, cy) = v.px(center);
            let _ = writeln!(
                out,
                r#"<circle class="boundary" cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" fill="none" stroke="{BOUNDARY_COLOR}" stroke-width="2"/>"#,
                radius * v.scale
            );
            if let Shape::PuncturedBall { punctures, .. } = shape {
                for p in punctures {
                    let (x, y) = v.px(p);
                    let _ = writeln!(
                        out,
                        r#"<circle class="puncture" cx="{x:.3}" cy="{y:.3}" r="4" fill="{SLIT_COLOR}"/>"#
                    );
                }
            }
        }
        Shape::SlitDisc { center, radius, slits } => {
            shape_svg(out, v, &Shape::Ball { center: center.to_vec(), radius: *radius }, lo, hi);
            for s in slits {
                let (x1, y1) = v.px(&[center[0] + s[0], center[1]]);
                let (x2, y2) = v.px(&[center[0] + s[1], center[1]]);
                let _ = writeln!(
                    out,
                    r#"<line class="slit" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{SLIT_COLOR}" stroke-width="3"/>"#
                );
            }
        }
        Shape::Polygon { vertices } => {
            let pts: Vec<String> = vertices
                .iter()
                .map(|p| {
                    let (x, y) = v.px(p);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polygon class="boundary" points="{}" fill="none" stroke="{BOUNDARY_COLOR}" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
        Shape::HalfSpace { normal, offset } => {
            // the boundary line ⟨n, x⟩ = offset, clipped to the view box
            let (a, b) = (normal[0], normal[1]);
            let ends = if b.abs() >= a.abs() {
                [[lo[0], (offset - a * lo[0]) / b], [hi[0], (offset - a * hi[0]) / b]]
            } else {
                [[(offset - b * lo[1]) / a, lo[1]], [(offset - b * hi[1]) / a, hi[1]]]
            };
            let (x1, y1) = v.px(&ends[0]);
            let (x2, y2) = v.px(&ends[1]);
            let _ = writeln!(
                out,
                r#"<line class="boundary" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{BOUNDARY_COLOR}" stroke-width="2"/>"#
            );
        }
        Shape::Intersection { parts } => {
            for p in parts {
                shape_svg(out, v, p, lo, hi);
            }
        }
        Shape::HeinonenComb { .. } => {}
    }
}

fn arc_svg(out: &mut String, v: &View, arc: &Arc) {
    let pts: Vec<String> = arc
        .vertices()
        .iter()
        .map(|p| {
            let (x, y) = v.px(p.coords());
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline class="arc" points="{}" fill="none" stroke="{ARC_COLOR}" stroke-width="2"/>"#,
        pts.join(" ")
    );
}

fn marker_svg(out: &mut String, v: &View, p: &SpecialPoint, class: &str, color: &str, dy: f64) {
    let (x, y) = v.px(p.point.coords());
    let _ = writeln!(
        out,
        r#"<circle class="{class}" cx="{x:.3}" cy="{y:.3}" r="5" fill="{color}"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text class="{class}-label" x="{:.3}" y="{:.3}" font-size="14" fill="{color}">{} d={:.4}</text>"#,
        x + 8.0,
        y + dy,
        escape(&p.label),
        p.d
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('\'', "&#39;")
}

/// SVG document for a planar domain with optional arcs and decompositions.
pub fn render_svg(dom: &Domain, arcs: &[Arc], decs: &[DyadicDecomposition]) -> Result<String> {
    if dom.dim() != 2 {
        return Err(QhError::Unsupported(format!(
            "plots need a planar domain, got dimension {}",
            dom.dim()
        )));
    }
    if arcs.iter().chain(decs.iter().map(|d| &d.arc)).any(|a| a.norm().dim() != 2) {
        return Err(QhError::Unsupported("plots need planar arcs".into()));
    }
    let (lo, hi) = extent(dom, arcs, decs);
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let v = View { lo, scale: (CANVAS - 100.0) / span };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="1000" height="1000" viewBox="0 0 1000 1000">"#
    );
    let _ = writeln!(out, r##"<rect width="1000" height="1000" fill="#ffffff"/>"##);
    shape_svg(&mut out, &v, dom.shape(), lo, hi);
    for a in arcs {
        arc_svg(&mut out, &v, a);
    }
    for d in decs {
        arc_svg(&mut out, &v, &d.arc);
        for p in &d.forward_points {
            marker_svg(&mut out, &v, p, "forward-marker", FORWARD_COLOR, -8.0);
        }
        for p in &d.backward_points {
            marker_svg(&mut out, &v, p, "backward-marker", BACKWARD_COLOR, 18.0);
        }
        marker_svg(&mut out, &v, &d.w0, "w0-marker", W0_COLOR, 36.0);
    }
    out.push_str("</svg>\n");
    Ok(out)
}
