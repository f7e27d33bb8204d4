//! Corner-graded mapped triangulations of meridian domains.

use crate::error::{Result, SloshError};
use crate::geometry::MeridianDomain;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;

/// Grading ratios are quoted per sixteenth of the span, so the physical
/// grading profile stays fixed under refinement.
const GRADING_REFERENCE_CELLS: f64 = 16.0;
/// Largest node count `generate` will allocate.
pub const MAX_NODES: usize = 50_000_000;
/// A quad leaves the corner-directed diagonal only when the other one lowers
/// its largest angle by more than this (radians).
const DIAGONAL_ANGLE_MARGIN: f64 = 1e-9;
const MIN_ANGLE_WARN_DEG: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BoundaryTag {
    FreeSurface,
    Bottom,
    Axis,
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryTag::FreeSurface => "FreeSurface",
            BoundaryTag::Bottom => "Bottom",
            BoundaryTag::Axis => "Axis",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Cell counts and geometric grading of the mapped grid.
///
/// `corner_ratio` is the size ratio of neighbouring cells per sixteenth of the
/// span, toward the contact corner `(r0, 0)` in both mapped directions; `1`
/// means uniform. `axis_ratio` adds the same kind of grading toward `r = 0`.
/// `apex_ratio` grades the rows toward the bottom when the bottom meets the
/// axis in a single point, and is ignored otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradingSpec {
    pub nr: usize,
    pub ny: usize,
    pub corner_ratio: f64,
    pub axis_ratio: Option<f64>,
    pub apex_ratio: Option<f64>,
}

impl GradingSpec {
    pub const DEFAULT_CORNER_RATIO: f64 = 0.85;

    pub fn new(nr: usize, ny: usize) -> Self {
        GradingSpec {
            nr,
            ny,
            corner_ratio: Self::DEFAULT_CORNER_RATIO,
            axis_ratio: None,
            apex_ratio: None,
        }
    }

    pub fn uniform(nr: usize, ny: usize) -> Self {
        GradingSpec {
            nr,
            ny,
            corner_ratio: 1.0,
            axis_ratio: None,
            apex_ratio: None,
        }
    }

    pub fn with_corner_ratio(mut self, ratio: f64) -> Self {
        self.corner_ratio = ratio;
        self
    }

    pub fn with_axis_ratio(mut self, ratio: f64) -> Self {
        self.axis_ratio = Some(ratio);
        self
    }

    pub fn with_apex_ratio(mut self, ratio: f64) -> Self {
        self.apex_ratio = Some(ratio);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nr < 2 || self.ny < 2 {
            return Err(SloshError::InvalidParameter(format!(
                "cell counts must be at least 2, got nr = {}, ny = {}",
                self.nr, self.ny
            )));
        }
        let ratio_ok = |q: f64| q > 0.0 && q <= 1.0;
        if !ratio_ok(self.corner_ratio) {
            return Err(SloshError::InvalidParameter(format!(
                "corner_ratio must lie in (0, 1], got {}",
                self.corner_ratio
            )));
        }
        for (name, ratio) in [
            ("axis_ratio", self.axis_ratio),
            ("apex_ratio", self.apex_ratio),
        ] {
            if let Some(q) = ratio {
                if !ratio_ok(q) {
                    return Err(SloshError::InvalidParameter(format!(
                        "{name} must lie in (0, 1], got {q}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Parameter grid on `[0, 1]` with cells shrinking geometrically toward 1
/// (and toward 0 when `start_ratio` is given).
fn graded_grid(n: usize, end_ratio: f64, start_ratio: Option<f64>) -> Vec<f64> {
    let per_cell = |q: f64| q.powf(GRADING_REFERENCE_CELLS / n as f64);
    let qe = per_cell(end_ratio);
    let qs = start_ratio.map(per_cell);
    let widths: Vec<f64> = (0..n)
        .map(|i| {
            let toward_end = qe.powi(i as i32);
            match qs {
                Some(q) => toward_end.min(q.powi((n - 1 - i) as i32)),
                None => toward_end,
            }
        })
        .collect();
    let total: f64 = widths.iter().sum();
    let mut grid = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    grid.push(0.0);
    for w in &widths[..n - 1] {
        acc += w;
        grid.push(acc / total);
    }
    grid.push(1.0);
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub grading: GradingSpec,
    #[serde(skip)]
    domain: MeridianDomain,
    /// Node indices of each constant-`y` row, bottom to top, ordered by `r`.
    #[serde(skip)]
    rows: Option<Vec<Vec<usize>>>,
}

impl Mesh {
    /// Assembles a mesh from raw parts; such meshes carry no row structure.
    pub fn from_parts(
        domain: MeridianDomain,
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        grading: GradingSpec,
    ) -> Self {
        Mesh {
            nodes,
            triangles,
            boundary_edges,
            grading,
            domain,
            rows: None,
        }
    }

    pub fn domain(&self) -> &MeridianDomain {
        &self.domain
    }

    pub fn rows(&self) -> Option<&[Vec<usize>]> {
        self.rows.as_deref()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes touched by an edge with the given tag, ascending.
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut nodes: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| e.nodes)
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    /// Index of the contact node `(r0, 0)`.
    pub fn corner_node(&self) -> Option<usize> {
        let r0 = self.domain.r0();
        self.nodes
            .iter()
            .position(|p| p[1] == 0.0 && (p[0] - r0).abs() <= 1e-12 * r0.max(1.0))
    }

    /// Signed area of triangle `t` (positive when counterclockwise).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Same connectivity with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Mesh> {
        let domain = self.domain.scaled(factor)?;
        Ok(Mesh {
            nodes: self
                .nodes
                .iter()
                .map(|p| [p[0] * factor, p[1] * factor])
                .collect(),
            triangles: self.triangles.clone(),
            boundary_edges: self.boundary_edges.clone(),
            grading: self.grading,
            domain,
            rows: self.rows.clone(),
        })
    }
}

pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Transfinite mapped grid with nodes at `(ξ_i·g(y_j), y_j)`.
///
/// Each quad is split along the diagonal pointing toward the contact corner,
/// unless the other diagonal gives a smaller largest angle, which happens in
/// cells sheared by a sloping or flat-bottomed wall.
///
/// Nodes are numbered row by row from the bottom. When the bottom meets the
/// axis in a point, the bottom row collapses to that single node and the first
/// layer becomes a fan.
pub fn generate(domain: &MeridianDomain, spec: &GradingSpec) -> Result<Mesh> {
    spec.validate()?;
    let (nr, ny) = (spec.nr, spec.ny);
    let n_nodes = (nr + 1)
        .checked_mul(ny + 1)
        .filter(|&n| n <= MAX_NODES)
        .ok_or_else(|| {
            SloshError::Resource(format!("grid {nr} x {ny} exceeds {MAX_NODES} nodes"))
        })?;

    let xi = graded_grid(nr, spec.corner_ratio, spec.axis_ratio);
    let y0 = domain.y0();
    let pointed = !(domain.radius_at(y0) > 0.0);
    let t = graded_grid(ny, spec.corner_ratio, spec.apex_ratio.filter(|_| pointed));
    let ys: Vec<f64> = t
        .iter()
        .enumerate()
        .map(|(j, &tj)| {
            if j == 0 {
                y0
            } else if j == ny {
                0.0
            } else {
                y0 * (1.0 - tj)
            }
        })
        .collect();
    let radii: Vec<f64> = ys.iter().map(|&y| domain.radius_at(y)).collect();
    if let Some(j) = (1..=ny).find(|&j| !(radii[j] > 0.0)) {
        return Err(SloshError::Meshing(format!(
            "profile vanishes at interior depth y = {} (row {j})",
            ys[j]
        )));
    }
    let apex = pointed;

    let mut nodes = Vec::with_capacity(n_nodes);
    let mut rows = Vec::with_capacity(ny + 1);
    for j in 0..=ny {
        if j == 0 && apex {
            rows.push(vec![nodes.len()]);
            nodes.push([0.0, y0]);
            continue;
        }
        let row: Vec<usize> = (0..=nr).map(|i| nodes.len() + i).collect();
        for (i, &x) in xi.iter().enumerate() {
            let r = if i == 0 {
                0.0
            } else if i == nr {
                radii[j]
            } else {
                x * radii[j]
            };
            nodes.push([r, ys[j]]);
        }
        rows.push(row);
    }

    let mut triangles = Vec::with_capacity(2 * nr * ny);
    for j in 0..ny {
        let (lower, upper) = (&rows[j], &rows[j + 1]);
        for i in 0..nr {
            if j == 0 && apex {
                triangles.push([lower[0], upper[i + 1], upper[i]]);
            } else {
                let (a, b, c, d) = (lower[i], lower[i + 1], upper[i + 1], upper[i]);
                let toward_corner = max_angle(&nodes, [a, b, c]).max(max_angle(&nodes, [a, c, d]));
                let other = max_angle(&nodes, [a, b, d]).max(max_angle(&nodes, [b, c, d]));
                if other < toward_corner - DIAGONAL_ANGLE_MARGIN {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                } else {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                }
            }
        }
    }

    // closed loop: floor, wall, free surface (inward), axis (downward)
    let mut boundary_edges = Vec::with_capacity(2 * (nr + ny));
    let edge = |a: usize, b: usize, tag: BoundaryTag| BoundaryEdge { nodes: [a, b], tag };
    if !apex {
        for i in 0..nr {
            boundary_edges.push(edge(rows[0][i], rows[0][i + 1], BoundaryTag::Bottom));
        }
    }
    for j in 0..ny {
        let from = *rows[j].last().unwrap();
        boundary_edges.push(edge(from, rows[j + 1][nr], BoundaryTag::Bottom));
    }
    for i in (0..nr).rev() {
        boundary_edges.push(edge(rows[ny][i + 1], rows[ny][i], BoundaryTag::FreeSurface));
    }
    for j in (0..ny).rev() {
        boundary_edges.push(edge(rows[j + 1][0], rows[j][0], BoundaryTag::Axis));
    }

    Ok(Mesh {
        nodes,
        triangles,
        boundary_edges,
        grading: *spec,
        domain: domain.clone(),
        rows: Some(rows),
    })
}

/// Largest interior angle of a triangle, in radians.
fn max_angle(nodes: &[[f64; 2]], tri: [usize; 3]) -> f64 {
    let p = tri.map(|v| nodes[v]);
    (0..3)
        .map(|k| {
            let (o, u, w) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            let (ux, uy, wx, wy) = (u[0] - o[0], u[1] - o[1], w[0] - o[0], w[1] - o[1]);
            (ux * wy - uy * wx).abs().atan2(ux * wx + uy * wy)
        })
        .fold(0.0, f64::max)
}

/// Regenerates the mesh with both cell counts doubled and the same grading ratios.
pub fn refine(mesh: &Mesh) -> Result<Mesh> {
    let double = |n: usize| {
        n.checked_mul(2)
            .ok_or_else(|| SloshError::Resource(format!("cell count {n} overflows")))
    };
    let spec = GradingSpec {
        nr: double(mesh.grading.nr)?,
        ny: double(mesh.grading.ny)?,
        ..mesh.grading
    };
    generate(&mesh.domain, &spec)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    NonPositiveArea { triangle: usize, area: f64 },
    NegativeRadius { node: usize },
    BadIndex { triangle: usize },
    FreeSurfaceOffPlane { edge: usize },
    AxisOffAxis { edge: usize },
    BottomOffProfile { edge: usize, distance: f64 },
    LoopCoverage { detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveArea { triangle, area } => {
                write!(f, "nonpositive area {area:e} at triangle {triangle}")
            }
            Violation::NegativeRadius { node } => write!(f, "negative r at node {node}"),
            Violation::BadIndex { triangle } => {
                write!(f, "node index out of range in triangle {triangle}")
            }
            Violation::FreeSurfaceOffPlane { edge } => {
                write!(f, "free-surface edge {edge} leaves y = 0 or r ∈ [0, r0]")
            }
            Violation::AxisOffAxis { edge } => write!(f, "axis edge {edge} leaves r = 0"),
            Violation::BottomOffProfile { edge, distance } => {
                write!(f, "bottom edge {edge} is {distance:e} off the profile")
            }
            Violation::LoopCoverage { detail } => write!(f, "boundary loop: {detail}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub min_angle_deg: f64,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

fn min_angle(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let angle = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| {
        let u = [q[0] - p[0], q[1] - p[1]];
        let v = [r[0] - p[0], r[1] - p[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        cross.abs().atan2(dot)
    };
    angle(a, b, c).min(angle(b, c, a)).min(angle(c, a, b))
}

/// Checks every structural invariant of a mesh.
pub fn validate(mesh: &Mesh) -> ValidationReport {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    let n = mesh.nodes.len();
    let domain = &mesh.domain;
    let length = domain.r0().max(-domain.y0());
    let tol = 1e-10 * length;

    for (k, p) in mesh.nodes.iter().enumerate() {
        if p[0] < 0.0 {
            violations.push(Violation::NegativeRadius { node: k });
        }
    }
    let mut min_deg = f64::INFINITY;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if tri.iter().any(|&v| v >= n) {
            violations.push(Violation::BadIndex { triangle: t });
            continue;
        }
        let area = mesh.signed_area(t);
        if !(area > 0.0) {
            violations.push(Violation::NonPositiveArea { triangle: t, area });
        } else {
            let [a, b, c] = tri.map(|v| mesh.nodes[v]);
            min_deg = min_deg.min(min_angle(a, b, c).to_degrees());
        }
    }

    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        if e.nodes.iter().any(|&v| v >= n) {
            violations.push(Violation::LoopCoverage {
                detail: format!("edge {k} references a missing node"),
            });
            continue;
        }
        let [p, q] = e.nodes.map(|v| mesh.nodes[v]);
        match e.tag {
            BoundaryTag::FreeSurface => {
                let ok = [p, q]
                    .iter()
                    .all(|x| x[1] == 0.0 && x[0] >= 0.0 && x[0] <= domain.r0() + tol);
                if !ok {
                    violations.push(Violation::FreeSurfaceOffPlane { edge: k });
                }
            }
            BoundaryTag::Axis => {
                if p[0] != 0.0 || q[0] != 0.0 {
                    violations.push(Violation::AxisOffAxis { edge: k });
                }
            }
            BoundaryTag::Bottom => {
                let off = |x: [f64; 2]| {
                    let floor = if (x[1] - domain.y0()).abs() <= tol
                        && x[0] <= domain.floor_radius() + tol
                    {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    floor.min((x[0] - domain.radius_at(x[1])).abs())
                };
                let distance = off(p).max(off(q));
                if distance > tol {
                    violations.push(Violation::BottomOffProfile { edge: k, distance });
                }
            }
        }
    }

    if let Err(detail) = check_loop(mesh) {
        violations.push(Violation::LoopCoverage { detail });
    }

    if min_deg < MIN_ANGLE_WARN_DEG {
        warnings.push(format!(
            "minimum triangle angle {min_deg:.2} deg is below {MIN_ANGLE_WARN_DEG} deg"
        ));
    }
    ValidationReport {
        violations,
        min_angle_deg: min_deg,
        warnings,
    }
}

fn check_loop(mesh: &Mesh) -> std::result::Result<(), String> {
    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in &mesh.triangles {
        if tri.iter().any(|&v| v >= mesh.nodes.len()) {
            return Err("triangle references a missing node".into());
        }
        for k in 0..3 {
            *count.entry(key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
        }
    }
    if let Some((e, c)) = count.iter().find(|(_, &c)| c > 2) {
        return Err(format!("edge {e:?} shared by {c} triangles"));
    }
    let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        if tagged.insert(key(e.nodes[0], e.nodes[1]), k).is_some() {
            return Err(format!("edge {k} tagged twice"));
        }
    }
    for (&e, &c) in &count {
        if c == 1 && !tagged.contains_key(&e) {
            return Err(format!("boundary edge {e:?} is untagged"));
        }
    }
    for (&e, &k) in &tagged {
        if count.get(&e) != Some(&1) {
            return Err(format!("tagged edge {k} is not on the boundary"));
        }
    }
    // one closed loop: every node has degree two and the walk visits all edges
    let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
    for e in &mesh.boundary_edges {
        adjacency.entry(e.nodes[0]).or_default().push(e.nodes[1]);
        adjacency.entry(e.nodes[1]).or_default().push(e.nodes[0]);
    }
    if let Some((v, _)) = adjacency.iter().find(|(_, nb)| nb.len() != 2) {
        return Err(format!(
            "boundary node {v} does not have exactly two boundary edges"
        ));
    }
    let Some(&start) = mesh.boundary_edges.first().map(|e| &e.nodes[0]) else {
        return Err("no boundary edges".into());
    };
    let (mut prev, mut cur, mut steps) = (start, adjacency[&start][0], 1);
    while cur != start {
        let nb = &adjacency[&cur];
        let next = if nb[0] == prev { nb[1] } else { nb[0] };
        prev = cur;
        cur = next;
        steps += 1;
        if steps > mesh.boundary_edges.len() {
            break;
        }
    }
    if steps != mesh.boundary_edges.len() {
        return Err(format!(
            "boundary splits into several loops ({steps} of {} edges in the first)",
            mesh.boundary_edges.len()
        ));
    }
    Ok(())
}
