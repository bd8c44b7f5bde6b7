//! Phase portraits as standalone SVG: shaded excluded disk, dashed
//! certified transversal circles and trajectory polylines.

use std::f64::consts::TAU;
use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::field::{polar, Vec2, VectorField};
use crate::flow::{certify_infinity_stability, StabilityControls, TransversalityCertificate};
use crate::ode::{integrate, Direction, FlowControls, TimeScale};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortraitControls {
    /// Half-width of the square view in field units.
    pub window: f64,
    pub rings: usize,
    pub seeds_per_ring: usize,
    /// Normalized-time horizon for each seed in each direction.
    pub t_max: f64,
    pub pixels: u32,
}

impl Default for PortraitControls {
    fn default() -> Self {
        Self { window: 10.0, rings: 3, seeds_per_ring: 12, t_max: 40.0, pixels: 800 }
    }
}

pub fn seeds(sigma: f64, pc: &PortraitControls) -> Vec<Vec2> {
    let mut out = vec![];
    for k in 1..=pc.rings {
        let r = sigma + (pc.window - sigma) * k as f64 / (pc.rings + 1) as f64;
        for j in 0..pc.seeds_per_ring {
            let offset = 0.5 * (k % 2) as f64;
            out.push(polar(r, TAU * (j as f64 + offset) / pc.seeds_per_ring as f64));
        }
    }
    out
}

pub fn portrait_svg(
    field: &dyn VectorField,
    mu: f64,
    pc: &PortraitControls,
    stability: &StabilityControls,
) -> Result<String> {
    let sigma = field.sigma();
    if !(pc.window > sigma) || pc.rings == 0 || pc.seeds_per_ring == 0 || pc.pixels == 0 {
        return Err(invalid(format!("portrait window must exceed sigma = {sigma} and counts be positive")));
    }
    let flow = FlowControls {
        rtol: 1e-7,
        atol: 1e-10,
        t_max: pc.t_max,
        escape_radius: 1.5 * pc.window,
        inner_radius: None,
        max_steps: 100_000,
        time_scale: TimeScale::Normalized,
        detect_loops: true,
    };
    let paths: Vec<Result<Vec<Vec<Vec2>>>> = seeds(sigma, pc)
        .par_iter()
        .map(|&z0| {
            let mut both = vec![];
            for dir in [Direction::Forward, Direction::Backward] {
                both.push(integrate(field, mu, z0, dir, &flow)?.points);
            }
            Ok(both)
        })
        .collect();
    let stab = certify_infinity_stability(field, mu, stability)?;

    let px = pc.pixels as f64;
    let scale = px / (2.0 * pc.window);
    let map = |p: Vec2| ((p[0] + pc.window) * scale, (pc.window - p[1]) * scale);
    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        pc.pixels
    );
    let _ = writeln!(w, r#"<title>{} at mu = {mu}</title>"#, xml_escape(field.name()));
    let _ = writeln!(w, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(w, r##"<clipPath id="view"><rect width="{0}" height="{0}"/></clipPath>"##, pc.pixels);
    let _ = writeln!(w, r#"<g clip-path="url(#view)">"#);
    let (cx, cy) = map([0.0, 0.0]);
    let _ = writeln!(
        w,
        r##"<circle cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" fill="#bbbbbb" stroke="#555555"/>"##,
        sigma * scale
    );
    for c in &stab.transversal_circles {
        if c.radius() > 1.5 * pc.window || !stab.certified_radii.contains(&c.radius()) {
            continue;
        }
        let color = match c {
            TransversalityCertificate::Outflow { .. } => "#c0392b",
            _ => "#2471a3",
        };
        let _ = writeln!(
            w,
            r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" fill="none" stroke="{color}" stroke-dasharray="6 4"/>"#,
            c.radius() * scale
        );
    }
    for seed in paths {
        for (k, path) in seed?.into_iter().enumerate() {
            let color = if k == 0 { "#1b1b1b" } else { "#7f7f7f" };
            let mut pts = String::new();
            for p in path {
                let (x, y) = map(p);
                let _ = write!(pts, "{x:.3},{y:.3} ");
            }
            let _ = writeln!(
                w,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="0.8"/>"#,
                pts.trim_end()
            );
        }
    }
    let _ = writeln!(w, "</g>\n</svg>");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
