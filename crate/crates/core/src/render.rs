//! SVG drawings of planar complexes and exploration traces.

use std::fmt::Write as _;

use crate::complex::Complex;
use crate::error::{Error, Result};
use crate::exploration::ExplorationTrace;
use crate::geometry::norm;
use crate::graphs::{components, up_graph};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub r: f64,
    pub s: f64,
    /// Pixels per unit length.
    pub scale: f64,
}

const HIGHLIGHT: &str = "#1f5fbf";
const PLAIN: &str = "#555555";

/// Draws the window grid, revealed cubes, filled triangles, edges and
/// points, with the circles of radius `s` and `r`. Components of the
/// 1-skeleton that meet the sphere `∂B(0, s)` are drawn in blue.
pub fn render_svg(complex: &Complex, trace: Option<&ExplorationTrace>, opts: &RenderOptions) -> Result<String> {
    let grid = complex.window.grid;
    if grid.dim != 2 {
        return Err(Error::InvalidParameter(format!("rendering needs d = 2, got d = {}", grid.dim)));
    }
    let (mut x0, mut y0, mut x1, mut y1) = (-opts.r, -opts.r, opts.r, opts.r);
    for &c in complex.window.cubes() {
        let (lo, hi) = grid.bounds(c);
        x0 = x0.min(lo[0]);
        y0 = y0.min(lo[1]);
        x1 = x1.max(hi[0]);
        y1 = y1.max(hi[1]);
    }
    let k = opts.scale;
    let px = |x: f64| (x - x0) * k;
    let py = |y: f64| (y1 - y) * k;
    let (w, h) = ((x1 - x0) * k, (y1 - y0) * k);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    let cube_rect = |svg: &mut String, c: u64, style: &str| {
        let (lo, hi) = grid.bounds(c);
        let _ = writeln!(
            svg,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" {style}/>"#,
            px(lo[0]),
            py(hi[1]),
            (hi[0] - lo[0]) * k,
            (hi[1] - lo[1]) * k
        );
    };
    let _ = writeln!(svg, r#"<g id="revealed">"#);
    if let Some(t) = trace {
        for c in t.all_revealed() {
            cube_rect(&mut svg, c, r##"fill="#e8e8e8" stroke="none""##);
        }
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g id="grid">"#);
    for &c in complex.window.cubes() {
        cube_rect(&mut svg, c, r##"fill="none" stroke="#cccccc" stroke-width="0.5""##);
    }
    let _ = writeln!(svg, "</g>");

    let highlighted: Vec<bool> = if complex.alpha >= 1 && !complex.vertices.is_empty() {
        let comps = components(&up_graph(complex, 0)?);
        let n = complex.vertices.len();
        let mut inside = vec![false; n];
        let mut outside = vec![false; n];
        for v in 0..n {
            let d = norm(complex.position(v as u32));
            let l = comps.labels[v] as usize;
            inside[l] |= d <= opts.s;
            outside[l] |= d >= opts.s;
        }
        (0..n)
            .map(|v| {
                let l = comps.labels[v] as usize;
                inside[l] && outside[l]
            })
            .collect()
    } else {
        vec![false; complex.vertices.len()]
    };
    let colour = |v: u32| if highlighted[v as usize] { HIGHLIGHT } else { PLAIN };

    let _ = writeln!(svg, r#"<g id="triangles">"#);
    for t in complex.simplices(2) {
        let pts: Vec<String> = t
            .iter()
            .map(|&v| {
                let p = complex.position(v);
                format!("{:.3},{:.3}", px(p[0]), py(p[1]))
            })
            .collect();
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{}" fill-opacity="0.25" stroke="none"/>"#,
            pts.join(" "),
            colour(t[0])
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g id="edges" stroke-width="1">"#);
    for e in complex.simplices(1) {
        let (a, b) = (complex.position(e[0]), complex.position(e[1]));
        let _ = writeln!(
            svg,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{}"/>"#,
            px(a[0]),
            py(a[1]),
            px(b[0]),
            py(b[1]),
            colour(e[0])
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g id="points">"#);
    for (v, p) in complex.vertices.iter().enumerate() {
        let (fill, radius) = if p.is_origin { ("#d62728", 3.5) } else { (colour(v as u32), 2.0) };
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{radius}" fill="{fill}"/>"#,
            px(p.position[0]),
            py(p.position[1])
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r##"<g id="spheres" fill="none" stroke="#000000" stroke-width="1.5">"##);
    for (radius, dash) in [(opts.s, r#" stroke-dasharray="6 4""#), (opts.r, "")] {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.3}" cy="{:.3}" r="{:.3}"{dash}/>"#,
            px(0.0),
            py(0.0),
            radius * k
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}
