//! Minimal SVG output: meridian outline, wireframes and P1 iso-lines.

use slosh_core::Mesh;
use std::fmt::Write;

const WIDTH: f64 = 480.0;
const PAD: f64 = 12.0;

struct Frame {
    r_min: f64,
    y_max: f64,
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(mesh: &Mesh) -> Frame {
        let (mut r0, mut r1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for p in &mesh.nodes {
            r0 = r0.min(p[0]);
            r1 = r1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let scale = (WIDTH - 2.0 * PAD) / (r1 - r0).max(f64::MIN_POSITIVE);
        Frame {
            r_min: r0,
            y_max: y1,
            scale,
            height: (y1 - y0) * scale + 2.0 * PAD,
        }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            PAD + (p[0] - self.r_min) * self.scale,
            PAD + (self.y_max - p[1]) * self.scale,
        )
    }
}

fn open(frame: &Frame) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{:.0}\" viewBox=\"0 0 {WIDTH:.0} {:.0}\">\n",
        frame.height, frame.height
    )
}

fn segment(out: &mut String, frame: &Frame, a: [f64; 2], b: [f64; 2], style: &str) {
    let (x1, y1) = frame.map(a);
    let (x2, y2) = frame.map(b);
    let _ = writeln!(
        out,
        "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" {style}/>"
    );
}

fn outline(out: &mut String, frame: &Frame, mesh: &Mesh) {
    for e in &mesh.boundary_edges {
        let [a, b] = e.nodes;
        segment(
            out,
            frame,
            mesh.nodes[a],
            mesh.nodes[b],
            "stroke=\"black\" stroke-width=\"1.5\"",
        );
    }
}

pub fn wireframe(mesh: &Mesh) -> String {
    let frame = Frame::new(mesh);
    let mut out = open(&frame);
    for t in &mesh.triangles {
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            if a < b {
                segment(
                    &mut out,
                    &frame,
                    mesh.nodes[a],
                    mesh.nodes[b],
                    "stroke=\"gray\" stroke-width=\"0.3\"",
                );
            }
        }
    }
    outline(&mut out, &frame, mesh);
    out.push_str("</svg>\n");
    out
}

/// Piecewise-linear iso-lines of a nodal field at `levels` interior levels.
pub fn contours(mesh: &Mesh, field: &[f64], levels: usize) -> String {
    let frame = Frame::new(mesh);
    let mut out = open(&frame);
    let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for l in 1..=levels {
        let c = lo + (hi - lo) * l as f64 / (levels + 1) as f64;
        let hue = 240.0 * (1.0 - l as f64 / (levels + 1) as f64);
        let style = format!("stroke=\"hsl({hue:.0},80%,45%)\" stroke-width=\"1\"");
        for t in &mesh.triangles {
            let mut hits = Vec::with_capacity(2);
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                let (fa, fb) = (field[a] - c, field[b] - c);
                if (fa < 0.0) != (fb < 0.0) {
                    let s = fa / (fa - fb);
                    let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                    hits.push([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]);
                }
            }
            if let [p, q] = hits[..] {
                segment(&mut out, &frame, p, q, &style);
            }
        }
    }
    outline(&mut out, &frame, mesh);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use slosh_core::geometry::make_cylinder;
    use slosh_core::mesh::{generate, GradingSpec};

    #[test]
    fn linear_field_gives_straight_levels() {
        let mesh = generate(&make_cylinder(1.0).unwrap(), &GradingSpec::uniform(4, 4)).unwrap();
        let field: Vec<f64> = mesh.nodes.iter().map(|p| p[0]).collect();
        let svg = contours(&mesh, &field, 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        // levels r = 1/3, 2/3 miss the node columns and cut both triangles of one cell per row
        let lines = svg.matches("hsl(").count();
        assert_eq!(lines, 2 * 4 * 2);
    }
}
