//! Deterministic SVG plots: heatmap, domain outline, contours, critical
//! markers, `f(u)` sign shading and ball outlines. Coordinates are written
//! with six decimals and elements in a fixed order.

use std::fmt::Write as _;

use peaklab::field::ScalarField;
use peaklab::nonlinearity::NonlinearLaw;
use peaklab::topology::{CriticalKind, CriticalPoint, LevelComponent};
use peaklab::{Domain, Point};

const PLOT: f64 = 500.0;
const MARGIN: f64 = 20.0;
const LEGEND: f64 = 200.0;

#[derive(Default)]
pub struct Overlays<'a> {
    pub contours: &'a [LevelComponent],
    pub critical: &'a [CriticalPoint],
    /// Shade `f(u) > 0` red and `f(u) < 0` blue.
    pub law: Option<&'a dyn NonlinearLaw>,
    pub balls: &'a [(Point, f64)],
}

struct View {
    lo: Point,
    hi: Point,
    scale: f64,
}

impl View {
    fn x(&self, x: f64) -> f64 {
        MARGIN + (x - self.lo.x) * self.scale
    }
    fn y(&self, y: f64) -> f64 {
        MARGIN + (self.hi.y - y) * self.scale
    }
}

// Five-stop perceptual ramp from dark purple to yellow.
const RAMP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let s = t * (RAMP.len() - 1) as f64;
    let i = (s.floor() as usize).min(RAMP.len() - 2);
    let w = s - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (RAMP[i][k] * (1.0 - w) + RAMP[i + 1][k] * w).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn glyph(out: &mut String, kind: Option<CriticalKind>, x: f64, y: f64) {
    let r = 6.0;
    match kind {
        Some(CriticalKind::LocalMax) => {
            let _ = writeln!(
                out,
                "<path d=\"M{:.6} {:.6}L{:.6} {:.6}L{:.6} {:.6}Z\" fill=\"#d62728\" stroke=\"#000000\"/>",
                x,
                y - r,
                x + r,
                y + r,
                x - r,
                y + r
            );
        }
        Some(CriticalKind::LocalMin) => {
            let _ = writeln!(
                out,
                "<path d=\"M{:.6} {:.6}L{:.6} {:.6}L{:.6} {:.6}Z\" fill=\"#1f77b4\" stroke=\"#000000\"/>",
                x,
                y + r,
                x + r,
                y - r,
                x - r,
                y - r
            );
        }
        Some(CriticalKind::Saddle) => {
            let _ = writeln!(
                out,
                "<path d=\"M{:.6} {:.6}L{:.6} {:.6}M{:.6} {:.6}L{:.6} {:.6}\" stroke=\"#000000\" stroke-width=\"2\"/>",
                x - r,
                y - r,
                x + r,
                y + r,
                x - r,
                y + r,
                x + r,
                y - r
            );
        }
        Some(CriticalKind::NonIsolatedComponent) => {
            let _ = writeln!(
                out,
                "<circle cx=\"{x:.6}\" cy=\"{y:.6}\" r=\"{r:.6}\" fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\"2\"/>"
            );
        }
        None => {
            let _ = writeln!(
                out,
                "<rect x=\"{:.6}\" y=\"{:.6}\" width=\"{:.6}\" height=\"{:.6}\" fill=\"#7f7f7f\" stroke=\"#000000\"/>",
                x - 0.5 * r,
                y - 0.5 * r,
                r,
                r
            );
        }
    }
}

fn kind_label(kind: Option<CriticalKind>) -> &'static str {
    match kind {
        Some(CriticalKind::LocalMax) => "local max",
        Some(CriticalKind::LocalMin) => "local min",
        Some(CriticalKind::Saddle) => "saddle",
        Some(CriticalKind::NonIsolatedComponent) => "non-isolated",
        None => "unclassified",
    }
}

/// Render `field` on `domain` with a `cells × cells` heatmap.
pub fn render_svg(field: &dyn ScalarField, domain: &Domain, cells: usize, overlays: &Overlays) -> String {
    let (lo, hi) = domain.bbox();
    let scale = PLOT / (hi.x - lo.x).max(hi.y - lo.y);
    let view = View { lo, hi, scale };
    let width = 2.0 * MARGIN + (hi.x - lo.x) * scale + LEGEND;
    let height = (2.0 * MARGIN + (hi.y - lo.y) * scale).max(2.0 * MARGIN + 300.0);

    let cells = cells.max(1);
    let (cw, ch) = ((hi.x - lo.x) / cells as f64, (hi.y - lo.y) / cells as f64);
    let mut samples = Vec::with_capacity(cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let x = Point::new(lo.x + (i as f64 + 0.5) * cw, lo.y + (j as f64 + 0.5) * ch);
            let v = if domain.contains_closed(x) { field.value(x) } else { f64::NAN };
            samples.push((i, j, x, v));
        }
    }
    let finite = samples.iter().map(|s| s.3).filter(|v| v.is_finite());
    let (vmin, vmax) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.6}\" height=\"{height:.6}\" viewBox=\"0 0 {width:.6} {height:.6}\">"
    );
    let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{width:.6}\" height=\"{height:.6}\" fill=\"#ffffff\"/>");

    out.push_str("<g id=\"heatmap\" shape-rendering=\"crispEdges\">\n");
    let (pw, ph) = (cw * scale, ch * scale);
    for &(i, j, _, v) in &samples {
        if !v.is_finite() {
            continue;
        }
        let x0 = view.x(lo.x + i as f64 * cw);
        let y0 = view.y(lo.y + (j + 1) as f64 * ch);
        let _ = writeln!(
            out,
            "<rect x=\"{x0:.6}\" y=\"{y0:.6}\" width=\"{pw:.6}\" height=\"{ph:.6}\" fill=\"{}\"/>",
            color((v - vmin) / span)
        );
    }
    out.push_str("</g>\n");

    if let Some(law) = overlays.law {
        out.push_str("<g id=\"sign-regions\" shape-rendering=\"crispEdges\">\n");
        for &(i, j, _, v) in &samples {
            if !v.is_finite() || !law.contains(v) {
                continue;
            }
            let f = law.f(v);
            let fill = if f > 0.0 {
                "#ff0000"
            } else if f < 0.0 {
                "#0000ff"
            } else {
                continue;
            };
            let x0 = view.x(lo.x + i as f64 * cw);
            let y0 = view.y(lo.y + (j + 1) as f64 * ch);
            let _ = writeln!(
                out,
                "<rect x=\"{x0:.6}\" y=\"{y0:.6}\" width=\"{pw:.6}\" height=\"{ph:.6}\" fill=\"{fill}\" fill-opacity=\"0.2\"/>"
            );
        }
        out.push_str("</g>\n");
    }

    out.push_str("<g id=\"domain\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\">\n");
    match domain.as_disk() {
        Some((c, r)) => {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\"/>",
                view.x(c.x),
                view.y(c.y),
                r * scale
            );
        }
        None => {
            let pts: Vec<String> = domain
                .vertices()
                .iter()
                .map(|v| format!("{:.6},{:.6}", view.x(v.x), view.y(v.y)))
                .collect();
            let _ = writeln!(out, "<polygon points=\"{}\"/>", pts.join(" "));
        }
    }
    out.push_str("</g>\n");

    out.push_str("<g id=\"contours\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"1\">\n");
    for c in overlays.contours {
        if c.points.len() < 2 {
            continue;
        }
        let mut d = String::new();
        for (k, p) in c.points.iter().enumerate() {
            let _ = write!(d, "{}{:.6} {:.6}", if k == 0 { "M" } else { "L" }, view.x(p[0]), view.y(p[1]));
        }
        if c.closed {
            d.push('Z');
        }
        let stroke = if c.critical { " stroke=\"#ff7f0e\" stroke-width=\"2.5\"" } else { "" };
        let _ = writeln!(out, "<path data-level=\"{:.6}\" d=\"{d}\"{stroke}/>", c.level);
    }
    out.push_str("</g>\n");

    out.push_str("<g id=\"balls\" fill=\"none\" stroke=\"#e377c2\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\">\n");
    for (p, r) in overlays.balls {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.6}\" cy=\"{:.6}\" r=\"{:.6}\"/>",
            view.x(p.x),
            view.y(p.y),
            r * scale
        );
    }
    out.push_str("</g>\n");

    out.push_str("<g id=\"critical\">\n");
    for c in overlays.critical {
        glyph(&mut out, c.kind, view.x(c.position[0]), view.y(c.position[1]));
    }
    out.push_str("</g>\n");

    // Legend: colour bar, contour levels, marker glyphs.
    let lx = 2.0 * MARGIN + (hi.x - lo.x) * scale;
    out.push_str("<g id=\"legend\" font-family=\"monospace\" font-size=\"11\">\n");
    for k in 0..20 {
        let t = k as f64 / 19.0;
        let y = MARGIN + (19 - k) as f64 * 6.0;
        let _ = writeln!(
            out,
            "<rect x=\"{lx:.6}\" y=\"{y:.6}\" width=\"14.000000\" height=\"6.000000\" fill=\"{}\"/>",
            color(t)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.6}\" y=\"{:.6}\">{:.6}</text>",
        lx + 20.0,
        MARGIN + 8.0,
        if vmax.is_finite() { vmax } else { 0.0 }
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.6}\" y=\"{:.6}\">{:.6}</text>",
        lx + 20.0,
        MARGIN + 120.0,
        if vmin.is_finite() { vmin } else { 0.0 }
    );
    let mut y = MARGIN + 145.0;
    let mut levels: Vec<f64> = overlays.contours.iter().map(|c| c.level).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if !levels.is_empty() {
        let shown: Vec<String> = levels.iter().take(12).map(|l| format!("{l:.6}")).collect();
        let _ = writeln!(out, "<text x=\"{lx:.6}\" y=\"{y:.6}\">levels:</text>");
        for s in shown {
            y += 13.0;
            let _ = writeln!(out, "<text x=\"{:.6}\" y=\"{y:.6}\">{s}</text>", lx + 8.0);
        }
        if levels.len() > 12 {
            y += 13.0;
            let _ = writeln!(out, "<text x=\"{:.6}\" y=\"{y:.6}\">(+{} more)</text>", lx + 8.0, levels.len() - 12);
        }
    }
    let mut kinds: Vec<Option<CriticalKind>> = Vec::new();
    for k in [
        Some(CriticalKind::LocalMax),
        Some(CriticalKind::LocalMin),
        Some(CriticalKind::Saddle),
        Some(CriticalKind::NonIsolatedComponent),
        None,
    ] {
        if overlays.critical.iter().any(|c| c.kind == k) {
            kinds.push(k);
        }
    }
    for k in kinds {
        y += 18.0;
        glyph(&mut out, k, lx + 6.0, y - 4.0);
        let _ = writeln!(out, "<text x=\"{:.6}\" y=\"{y:.6}\">{}</text>", lx + 18.0, kind_label(k));
    }
    out.push_str("</g>\n</svg>\n");
    out
}
