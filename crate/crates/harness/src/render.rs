//! SVG snapshots: hexagonal cells per occupied node, fill color by algorithm
//! state with opacity scaled by battery level, outlined sources, parent links
//! drawn as arrows, expanded amoebots joined into lozenges.

use amoebot_core::algorithms::hexagon as hx;
use amoebot_core::algorithms::leader as le;
use amoebot_core::energy::{self, EBAT, PARENT, STATE};
use amoebot_core::lattice::NodeCoord;
use amoebot_core::value::Value;
use amoebot_core::SystemConfiguration;
use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct RenderStyle {
    /// Battery capacity for the opacity scale.
    pub kappa: u32,
    /// Pixel distance between adjacent node centers.
    pub pitch: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            kappa: energy::DEFAULT_CAPACITY,
            pitch: 24.0,
        }
    }
}

fn center(v: NodeCoord, pitch: f64) -> (f64, f64) {
    let x = pitch * (v.q as f64 + v.r as f64 / 2.0);
    let y = pitch * (v.r as f64 * 3f64.sqrt() / 2.0);
    (x, -y)
}

fn hex_corners(cx: f64, cy: f64, radius: f64) -> String {
    (0..6)
        .map(|i| {
            let a = std::f64::consts::PI / 180.0 * (60.0 * i as f64 + 30.0);
            format!("{:.2},{:.2}", cx + radius * a.cos(), cy + radius * a.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Fill color for an amoebot: the workload state when one is present,
/// otherwise its energy-distribution state.
fn state_color(rec: &amoebot_core::AmoebotRecord) -> Option<&'static str> {
    if let Some(phase) = rec.public.get(le::PHASE).and_then(Value::as_sym) {
        return match phase {
            le::CANDIDATE => Some("#2b6cb0"),
            le::ERODED => Some("#4a5568"),
            le::LEADER => Some("#c53030"),
            _ => None,
        };
    }
    if let Some(role) = rec.public.get(hx::ROLE).and_then(Value::as_sym) {
        return match role {
            hx::SEED => Some("#1a202c"),
            hx::FOLLOWER => Some("#2b6cb0"),
            hx::ROOT => Some("#6b46c1"),
            hx::RETIRED => Some("#2f855a"),
            _ => None,
        };
    }
    match rec.public.get(STATE).and_then(Value::as_sym) {
        Some(energy::SOURCE) => Some("#1a202c"),
        Some(energy::PRUNING) => Some("#dd6b20"),
        Some(s) if s != energy::IDLE => Some("#2f855a"),
        _ => None,
    }
}

/// Renders a configuration into a standalone SVG document.
pub fn render_svg(cfg: &SystemConfiguration, style: &RenderStyle) -> String {
    let pitch = style.pitch;
    let radius = pitch / 3f64.sqrt();
    let centers: Vec<(f64, f64)> = cfg.occupied_nodes().map(|v| center(v, pitch)).collect();
    let (min_x, max_x) = bounds(centers.iter().map(|c| c.0));
    let (min_y, max_y) = bounds(centers.iter().map(|c| c.1));
    let pad = pitch * 1.5;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.2} {:.2} {:.2} {:.2}">"#,
        min_x - pad,
        min_y - pad,
        (max_x - min_x) + 2.0 * pad,
        (max_y - min_y) + 2.0 * pad,
    );
    let _ = writeln!(
        out,
        r##"<defs><marker id="arrow" viewBox="0 0 8 8" refX="7" refY="4" markerWidth="5" markerHeight="5" orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="#718096"/></marker></defs>"##
    );

    // cells
    for (id, rec) in cfg.amoebots() {
        let color = state_color(rec);
        let is_source = rec.public.get(STATE).and_then(Value::as_sym) == Some(energy::SOURCE);
        let opacity = match rec.public.get(EBAT).and_then(Value::as_int) {
            Some(b) if style.kappa > 0 => (b as f64 / style.kappa as f64).clamp(0.0, 1.0),
            _ => 1.0,
        };
        let stroke = if is_source { "#000000" } else { "#a0aec0" };
        let stroke_width = if is_source { 2.5 } else { 0.8 };
        for node in rec.nodes() {
            let (cx, cy) = center(node, pitch);
            let fill = color.unwrap_or("none");
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{}" fill-opacity="{:.3}" stroke="{}" stroke-width="{}" data-amoebot="{}"/>"#,
                hex_corners(cx, cy, radius),
                fill,
                opacity,
                stroke,
                stroke_width,
                id.0
            );
        }
        // lozenge bar joining an expanded pair
        if let Some(tail) = rec.tail {
            let (hx_, hy) = center(rec.head, pitch);
            let (tx, ty) = center(tail, pitch);
            let _ = writeln!(
                out,
                r##"<line x1="{hx_:.2}" y1="{hy:.2}" x2="{tx:.2}" y2="{ty:.2}" stroke="{}" stroke-opacity="0.85" stroke-width="{:.2}" stroke-linecap="round"/>"##,
                color.unwrap_or("#a0aec0"),
                radius * 0.9,
            );
        }
    }

    // parent links
    for (_, rec) in cfg.amoebots() {
        if let Some(Value::Edge(e)) = rec.public.get(PARENT) {
            let (x1, y1) = center(e.from, pitch);
            let (x2, y2) = center(e.to, pitch);
            // shorten toward the target so the arrowhead stays visible
            let (dx, dy) = (x2 - x1, y2 - y1);
            let (x2, y2) = (x1 + dx * 0.72, y1 + dy * 0.72);
            let _ = writeln!(
                out,
                r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#718096" stroke-width="1.6" marker-end="url(#arrow)" class="parent-link"/>"##
            );
        }
    }

    out.push_str("</svg>\n");
    out
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if min > max {
        (0.0, 0.0)
    } else {
        (min, max)
    }
}
