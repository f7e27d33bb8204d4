//! Meridian domains `D = {(r, y) : y0 < y < 0, 0 < r < g(y)}` and their
//! star-shaped radial representation.

use crate::error::{Result, SloshError};
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Number of profile samples emitted by the closed-form generators.
pub const PROFILE_SAMPLES: usize = 401;
/// Default angular resolution of [`star_rep`].
pub const DEFAULT_ANGLES: usize = 4096;

const JOHN_TOL: f64 = 1e-12;
const CONCAVITY_TOL: f64 = 1e-10;

/// Analytic origin of a profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ClosedForm {
    Cylinder(f64),
    Cone(f64),
    Troesch(f64),
    SphericalCap(f64),
    Hemisphere,
    Custom,
}

impl ClosedForm {
    /// Depth of the lowest point of the unit-surface shape.
    fn depth(self) -> f64 {
        match self {
            ClosedForm::Cylinder(h) => h,
            ClosedForm::Cone(lambda) => lambda / 4.0,
            ClosedForm::Troesch(lambda) => -troesch_bottom(lambda),
            ClosedForm::SphericalCap(d) => d + (1.0 + d * d).sqrt(),
            ClosedForm::Hemisphere => 1.0,
            ClosedForm::Custom => f64::NAN,
        }
    }

    fn radius(self, y: f64) -> f64 {
        match self {
            ClosedForm::Cylinder(_) => 1.0,
            ClosedForm::Cone(lambda) => (1.0 + 4.0 * y / lambda).max(0.0),
            ClosedForm::Troesch(lambda) => {
                // factored form keeps full relative accuracy near the bottom point
                let (lower, upper) = troesch_roots(lambda);
                2.0 * ((y - lower) * (y - upper)).max(0.0).sqrt()
            }
            ClosedForm::SphericalCap(d) => (1.0 + d * d - (y + d) * (y + d)).max(0.0).sqrt(),
            ClosedForm::Hemisphere => (1.0 - y * y).max(0.0).sqrt(),
            ClosedForm::Custom => f64::NAN,
        }
    }

    fn floor_radius(self) -> f64 {
        match self {
            ClosedForm::Cylinder(_) => 1.0,
            ClosedForm::Custom => f64::NAN,
            _ => 0.0,
        }
    }

    /// One-sided slope `g′(0⁻)`.
    fn surface_slope(self) -> f64 {
        match self {
            ClosedForm::Cylinder(_) | ClosedForm::Hemisphere => 0.0,
            ClosedForm::Cone(lambda) | ClosedForm::Troesch(lambda) => 4.0 / lambda,
            ClosedForm::SphericalCap(d) => -d,
            ClosedForm::Custom => f64::NAN,
        }
    }
}

/// Larger root of `4y² + 8y/λ + 1 = 0`.
pub fn troesch_bottom(lambda: f64) -> f64 {
    troesch_roots(lambda).1
}

fn troesch_roots(lambda: f64) -> (f64, f64) {
    let b = 2.0 / lambda;
    let disc = (b * b - 1.0).max(0.0).sqrt();
    let lower = 0.5 * (-b - disc);
    // -b + disc loses digits for small λ; use the product of the roots instead
    (lower, 0.25 / lower)
}

/// Radius profile `r = g(y)` on `[y0, 0]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    y_samples: Vec<f64>,
    g_samples: Vec<f64>,
    closed_form_tag: ClosedForm,
    /// Deformation parameter: the evaluated radius is `1 − s + s·g(y)`.
    deform: f64,
    /// Length scale applied after deformation.
    scale: f64,
}

impl Profile {
    fn closed(tag: ClosedForm, deform: f64, scale: f64) -> Self {
        let mut profile = Profile {
            y_samples: Vec::new(),
            g_samples: Vec::new(),
            closed_form_tag: tag,
            deform,
            scale,
        };
        let y0 = profile.bottom();
        let n = PROFILE_SAMPLES;
        profile.y_samples = (0..n)
            .map(|i| {
                if i + 1 == n {
                    0.0
                } else {
                    y0 * (1.0 - i as f64 / (n - 1) as f64)
                }
            })
            .collect();
        profile.g_samples = profile.y_samples.iter().map(|&y| profile.eval(y)).collect();
        profile
    }

    fn custom(y_samples: Vec<f64>, g_samples: Vec<f64>) -> Self {
        Profile {
            y_samples,
            g_samples,
            closed_form_tag: ClosedForm::Custom,
            deform: 1.0,
            scale: 1.0,
        }
    }

    pub fn y_samples(&self) -> &[f64] {
        &self.y_samples
    }

    pub fn g_samples(&self) -> &[f64] {
        &self.g_samples
    }

    pub fn closed_form_tag(&self) -> ClosedForm {
        self.closed_form_tag
    }

    pub fn deformation(&self) -> f64 {
        self.deform
    }

    /// Depth of the lowest point (negative).
    pub fn bottom(&self) -> f64 {
        match self.closed_form_tag {
            ClosedForm::Custom => self.y_samples[0],
            tag => -self.scale * tag.depth(),
        }
    }

    /// Radius `g(y)`; closed forms are evaluated exactly, custom profiles by
    /// linear interpolation. Outside `[y0, 0]` the end values are held.
    pub fn eval(&self, y: f64) -> f64 {
        match self.closed_form_tag {
            ClosedForm::Custom => interpolate(&self.y_samples, &self.g_samples, y),
            tag => {
                let y0 = self.bottom();
                let y = y.clamp(y0, 0.0);
                let base = if y == 0.0 {
                    1.0
                } else if y == y0 {
                    // avoid rounding under the square roots at the bottom point
                    tag.floor_radius()
                } else {
                    tag.radius(y / self.scale)
                };
                self.scale * (1.0 - self.deform + self.deform * base)
            }
        }
    }

    fn surface_slope(&self) -> f64 {
        match self.closed_form_tag {
            ClosedForm::Custom => {
                let n = self.y_samples.len();
                if n < 3 {
                    let dy = self.y_samples[n - 1] - self.y_samples[n - 2];
                    return (self.g_samples[n - 1] - self.g_samples[n - 2]) / dy;
                }
                one_sided_slope(
                    [
                        self.y_samples[n - 3],
                        self.y_samples[n - 2],
                        self.y_samples[n - 1],
                    ],
                    [
                        self.g_samples[n - 3],
                        self.g_samples[n - 2],
                        self.g_samples[n - 1],
                    ],
                )
            }
            tag => self.deform * tag.surface_slope(),
        }
    }
}

fn interpolate(xs: &[f64], vs: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return vs[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return vs[last];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    vs[k] + t * (vs[k + 1] - vs[k])
}

/// Slope at the last of three abscissae from the interpolating quadratic;
/// on a uniform grid this is the Richardson-extrapolated one-sided difference
/// `(3g₀ − 4g₋₁ + g₋₂) / 2h`.
fn one_sided_slope(y: [f64; 3], g: [f64; 3]) -> f64 {
    let (a, b, c) = (y[0], y[1], y[2]);
    let la = (c - b) / ((a - b) * (a - c));
    let lb = (c - a) / ((b - a) * (b - c));
    let lc = (2.0 * c - a - b) / ((c - a) * (c - b));
    la * g[0] + lb * g[1] + lc * g[2]
}

/// Interior angle between the free surface and the bottom at `(r0, 0)` for a
/// bottom slope `g′(0⁻)`.
pub fn contact_angle_from_slope(slope: f64) -> f64 {
    (slope / (1.0 + slope * slope).sqrt()).acos()
}

/// Class parameters `(ε, M, H, r0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassParams {
    pub eps: f64,
    pub lipschitz: f64,
    pub depth_bound: f64,
    pub r0: f64,
}

impl ClassParams {
    pub fn new(eps: f64, lipschitz: f64, depth_bound: f64, r0: f64) -> Result<Self> {
        let params = ClassParams {
            eps,
            lipschitz,
            depth_bound,
            r0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < self.r0.min(self.depth_bound)) {
            return Err(SloshError::InvalidParameter(format!(
                "eps = {} must lie in (0, min(r0, H)) = (0, {})",
                self.eps,
                self.r0.min(self.depth_bound)
            )));
        }
        if !(self.lipschitz >= 1.0) {
            return Err(SloshError::InvalidParameter(format!(
                "Lipschitz constant M = {} must be at least 1",
                self.lipschitz
            )));
        }
        Ok(())
    }

    /// Height `h0 = ε / (2M)` of the star anchor below the free surface.
    pub fn anchor_depth(&self) -> f64 {
        self.eps / (2.0 * self.lipschitz)
    }
}

/// A meridian cross-section with its derived metadata.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeridianDomain {
    name: String,
    profile: Profile,
    r0: f64,
    y0: f64,
    contact_angle: f64,
    john: bool,
    convex: bool,
    monotone: bool,
}

impl MeridianDomain {
    fn from_profile(name: String, profile: Profile) -> Self {
        let y0 = profile.bottom();
        let r0 = profile.eval(0.0);
        let g = &profile.g_samples;
        let max_g = g.iter().copied().fold(0.0, f64::max);
        let john = max_g <= r0 * (1.0 + JOHN_TOL);
        let monotone = g.windows(2).all(|w| w[1] >= w[0]);
        let convex = is_discretely_concave(&profile.y_samples, g);
        let contact_angle = contact_angle_from_slope(profile.surface_slope());
        MeridianDomain {
            name,
            profile,
            r0,
            y0,
            contact_angle,
            john,
            convex,
            monotone,
        }
    }

    /// Domain label in the CLI mini-language, e.g. `troesch:lambda=1`.
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Free-surface radius.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Depth of the lowest point (negative).
    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// Interior angle at the contact point `(r0, 0)`, in radians.
    pub fn contact_angle(&self) -> f64 {
        self.contact_angle
    }

    /// `W ⊂ F × (−∞, 0)`.
    pub fn john(&self) -> bool {
        self.john
    }

    pub fn convex(&self) -> bool {
        self.convex
    }

    /// Nondecreasing profile, the defining property of the monotone-bottom class.
    pub fn monotone(&self) -> bool {
        self.monotone
    }

    pub fn radius_at(&self, y: f64) -> f64 {
        self.profile.eval(y)
    }

    /// Radius of the horizontal floor at `y0` (zero when the bottom meets the axis in a point).
    pub fn floor_radius(&self) -> f64 {
        self.profile.eval(self.y0)
    }

    /// Meridian area `∫ g(y) dy`, by composite Simpson on the profile samples
    /// for closed forms and exactly for piecewise-linear custom profiles.
    pub fn area(&self) -> f64 {
        match self.profile.closed_form_tag {
            ClosedForm::Custom => self
                .profile
                .y_samples
                .windows(2)
                .zip(self.profile.g_samples.windows(2))
                .map(|(y, g)| 0.5 * (y[1] - y[0]) * (g[0] + g[1]))
                .sum(),
            _ => {
                let n = 20_000;
                let h = -self.y0 / n as f64;
                let mut acc = 0.0;
                for i in 0..=n {
                    let y = self.y0 + i as f64 * h;
                    let w = if i == 0 || i == n {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    acc += w * self.radius_at(y);
                }
                acc * h / 3.0
            }
        }
    }

    /// The same domain with all lengths multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(SloshError::InvalidParameter(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let profile = match self.profile.closed_form_tag {
            ClosedForm::Custom => Profile::custom(
                self.profile.y_samples.iter().map(|y| y * factor).collect(),
                self.profile.g_samples.iter().map(|g| g * factor).collect(),
            ),
            tag => Profile::closed(tag, self.profile.deform, self.profile.scale * factor),
        };
        Ok(MeridianDomain::from_profile(
            format!("{}@x{}", self.name, factor),
            profile,
        ))
    }

    /// `true` when `self ⊆ other` as meridian sets, checked on the profile samples of both.
    pub fn is_contained_in(&self, other: &MeridianDomain) -> bool {
        const TOL: f64 = 1e-12;
        if self.y0 < other.y0 - TOL {
            return false;
        }
        let ys = self
            .profile
            .y_samples
            .iter()
            .chain(other.profile.y_samples.iter().filter(|&&y| y >= self.y0));
        ys.into_iter()
            .all(|&y| self.radius_at(y) <= other.radius_at(y) + TOL)
    }
}

fn is_discretely_concave(y: &[f64], g: &[f64]) -> bool {
    (0..y.len().saturating_sub(2)).all(|k| {
        let s0 = (g[k + 1] - g[k]) / (y[k + 1] - y[k]);
        let s1 = (g[k + 2] - g[k + 1]) / (y[k + 2] - y[k + 1]);
        let second = 2.0 * (s1 - s0) / (y[k + 2] - y[k]);
        // scale the tolerance with the slope magnitude so steep sqrt tails round cleanly
        second <= CONCAVITY_TOL * (1.0 + s0.abs().max(s1.abs()) / (y[k + 2] - y[k]))
    })
}

fn fmt_param(v: f64) -> String {
    format!("{v}")
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SloshError::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn lambda_in_range(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 2.0 {
        Ok(())
    } else {
        Err(SloshError::InvalidParameter(format!(
            "lambda must lie in (0, 2], got {lambda}"
        )))
    }
}

/// Vertical cylinder of unit radius and depth `h`.
pub fn make_cylinder(h: f64) -> Result<MeridianDomain> {
    positive("cylinder depth h", h)?;
    Ok(MeridianDomain::from_profile(
        format!("cylinder:h={}", fmt_param(h)),
        Profile::closed(ClosedForm::Cylinder(h), 1.0, 1.0),
    ))
}

/// Circular cone `g(y) = 1 + 4y/λ` of height `λ/4`.
pub fn make_cone(lambda: f64) -> Result<MeridianDomain> {
    lambda_in_range(lambda)?;
    Ok(MeridianDomain::from_profile(
        format!("cone:lambda={}", fmt_param(lambda)),
        Profile::closed(ClosedForm::Cone(lambda), 1.0, 1.0),
    ))
}

/// Troesch container `g(y)² = 4y² + 8y/λ + 1`, whose sloshing spectrum contains `λ`.
pub fn make_troesch(lambda: f64) -> Result<MeridianDomain> {
    lambda_in_range(lambda)?;
    Ok(MeridianDomain::from_profile(
        format!("troesch:lambda={}", fmt_param(lambda)),
        Profile::closed(ClosedForm::Troesch(lambda), 1.0, 1.0),
    ))
}

/// Ball of radius `√(1 + d²)` centred at `(0, −d)`, cut by the unit free surface.
/// The bottom bulges past the free-surface disk, with contact angle
/// `arccos(−d/√(1 + d²)) > π/2`.
pub fn make_spherical_bulge(d: f64) -> Result<MeridianDomain> {
    positive("bulge offset d", d)?;
    Ok(MeridianDomain::from_profile(
        format!("bulge:d={}", fmt_param(d)),
        Profile::closed(ClosedForm::SphericalCap(d), 1.0, 1.0),
    ))
}

pub fn make_hemisphere() -> MeridianDomain {
    MeridianDomain::from_profile(
        "hemisphere".to_string(),
        Profile::closed(ClosedForm::Hemisphere, 1.0, 1.0),
    )
}

/// Builds a custom domain from `(y, g)` samples ending at `y = 0`.
///
/// Repeated depths describe a horizontal bottom step; the step is replaced by
/// a linear ramp across half of the following sample interval.
pub fn make_profile(samples: &[(f64, f64)]) -> Result<MeridianDomain> {
    make_named_profile("profile", samples)
}

pub fn make_named_profile(name: &str, samples: &[(f64, f64)]) -> Result<MeridianDomain> {
    if samples.len() < 2 {
        return Err(SloshError::InvalidParameter(format!(
            "profile needs at least two samples, got {}",
            samples.len()
        )));
    }
    for (i, &(y, g)) in samples.iter().enumerate() {
        if !y.is_finite() || !g.is_finite() {
            return Err(SloshError::InvalidParameter(format!(
                "non-finite sample at index {i}"
            )));
        }
        if g < 0.0 {
            return Err(SloshError::ClassViolation {
                index: i,
                reason: format!("negative radius {g}"),
            });
        }
    }
    let last = samples.len() - 1;
    if samples[last].0 != 0.0 {
        return Err(SloshError::InvalidParameter(format!(
            "profile must end at y = 0, last sample has y = {}",
            samples[last].0
        )));
    }
    for i in 0..last {
        if samples[i + 1].1 < samples[i].1 {
            return Err(SloshError::ClassViolation {
                index: i + 1,
                reason: format!(
                    "g decreases from {} to {} at y = {}",
                    samples[i].1,
                    samples[i + 1].1,
                    samples[i + 1].0
                ),
            });
        }
        if samples[i + 1].0 < samples[i].0 {
            return Err(SloshError::InvalidParameter(format!(
                "y must increase, sample {} has y = {} after {}",
                i + 1,
                samples[i + 1].0,
                samples[i].0
            )));
        }
    }
    if !(samples[last].1 > 0.0) {
        return Err(SloshError::InvalidParameter(
            "free-surface radius g(0) must be positive".into(),
        ));
    }

    // merge runs of equal depth into (y, g_low) → (y, g_high)
    let mut ys: Vec<f64> = Vec::with_capacity(samples.len());
    let mut gs: Vec<f64> = Vec::with_capacity(samples.len());
    let mut steps: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        let y = samples[i].0;
        let mut j = i;
        while j + 1 < samples.len() && samples[j + 1].0 == y {
            j += 1;
        }
        if j > i {
            if j == last {
                return Err(SloshError::ClassViolation {
                    index: j,
                    reason: "step in g at the free surface".into(),
                });
            }
            if ys.is_empty() {
                // repeated depth at the bottom: the floor radius is the larger value
                ys.push(y);
                gs.push(samples[j].1);
            } else {
                ys.push(y);
                gs.push(samples[i].1);
                steps.push(ys.len());
                ys.push(y);
                gs.push(samples[j].1);
            }
        } else {
            ys.push(y);
            gs.push(samples[i].1);
        }
        i = j + 1;
    }
    for &k in &steps {
        let width = 0.5 * (ys[k + 1] - ys[k]);
        ys[k] += width;
    }
    if !(ys[0] < 0.0) {
        return Err(SloshError::InvalidParameter(format!(
            "profile bottom y0 = {} must be negative",
            ys[0]
        )));
    }
    Ok(MeridianDomain::from_profile(
        name.to_string(),
        Profile::custom(ys, gs),
    ))
}

/// Straight-line deformation toward the cylinder: radius `1 − s + s·g(y)`.
pub fn deform(domain: &MeridianDomain, s: f64) -> Result<MeridianDomain> {
    if !(0.0..=1.0).contains(&s) {
        return Err(SloshError::InvalidParameter(format!(
            "deformation parameter must lie in [0, 1], got {s}"
        )));
    }
    if (domain.r0 - 1.0).abs() > 1e-12 {
        return Err(SloshError::UnsupportedDomain(format!(
            "deformation needs a unit free surface, r0 = {}",
            domain.r0
        )));
    }
    if s == 1.0 {
        return Ok(domain.clone());
    }
    if s == 0.0 {
        let mut cylinder = make_cylinder(-domain.y0)?;
        cylinder.name = format!("{}@s=0", domain.name);
        return Ok(cylinder);
    }
    let profile = match domain.profile.closed_form_tag {
        ClosedForm::Custom => Profile::custom(
            domain.profile.y_samples.clone(),
            domain
                .profile
                .g_samples
                .iter()
                .map(|g| 1.0 - s + s * g)
                .collect(),
        ),
        tag => Profile::closed(tag, s * domain.profile.deform, domain.profile.scale),
    };
    Ok(MeridianDomain::from_profile(
        format!("{}@s={}", domain.name, s),
        profile,
    ))
}

/// Radial function of a domain seen from `p0 = (0, −h0)`.
///
/// Angles are measured from the downward axis: `α̂ = 0` points at the bottom
/// point on the axis, `α̂ = π` straight up at the free surface. The boundary
/// point at angle `α̂` is `(f sin α̂, −h0 − f cos α̂)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarRep {
    pub p0: (f64, f64),
    pub h0: f64,
    pub alpha_grid: Vec<f64>,
    pub f_values: Vec<f64>,
    pub lipschitz_bound: f64,
}

impl StarRep {
    /// Boundary point for grid index `i`, in unshifted meridian coordinates.
    pub fn boundary_point(&self, i: usize) -> (f64, f64) {
        let a = self.alpha_grid[i];
        let f = self.f_values[i];
        (f * a.sin(), -self.h0 - f * a.cos())
    }
}

/// Checks `D ∈ 𝒟(ε, M, H, 1)` on a dense sampling of the boundary.
pub fn check_class(domain: &MeridianDomain, params: &ClassParams) -> Result<()> {
    params.validate()?;
    if (params.r0 - 1.0).abs() > 1e-12 || (domain.r0 - params.r0).abs() > 1e-12 {
        return Err(SloshError::ClassViolation {
            index: 0,
            reason: format!("free-surface radius {} differs from 1", domain.r0),
        });
    }
    if !domain.monotone {
        let idx = domain
            .profile
            .g_samples
            .windows(2)
            .position(|w| w[1] < w[0])
            .map_or(0, |p| p + 1);
        return Err(SloshError::ClassViolation {
            index: idx,
            reason: "profile is not nondecreasing".into(),
        });
    }
    let (eps, m, h) = (params.eps, params.lipschitz, params.depth_bound);
    if !(domain.y0 > -h && domain.y0 < -eps) {
        return Err(SloshError::ClassViolation {
            index: 0,
            reason: format!(
                "bottom depth {} not in (-H, -eps) = ({}, {})",
                domain.y0, -h, -eps
            ),
        });
    }
    let slack = 1.0 + 1e-9;
    // near the free surface: r = g(y) is M-Lipschitz on [-eps, 0]
    let n = 2000;
    let mut prev = (-eps, domain.radius_at(-eps));
    for i in 1..=n {
        let y = -eps + eps * i as f64 / n as f64;
        let r = domain.radius_at(y);
        let slope = (r - prev.1).abs() / (y - prev.0);
        if slope > m * slack {
            return Err(SloshError::ClassViolation {
                index: i,
                reason: format!("|g'| = {slope} exceeds M = {m} near the free surface (y = {y})"),
            });
        }
        prev = (y, r);
    }
    // near the axis: the bottom is a graph y(r) that is M-Lipschitz on [0, eps]
    let mut prev = (0.0, domain.y0);
    for i in 1..=n {
        let r = eps * i as f64 / n as f64;
        let y = bottom_height_at(domain, r).ok_or_else(|| SloshError::ClassViolation {
            index: i,
            reason: format!("bottom does not reach radius {r}"),
        })?;
        let slope = (y - prev.1).abs() / (r - prev.0);
        if slope > m * slack {
            return Err(SloshError::ClassViolation {
                index: i,
                reason: format!("bottom slope {slope} exceeds M = {m} near the axis (r = {r})"),
            });
        }
        prev = (r, y);
    }
    Ok(())
}

/// Lowest `y` with `g(y) ≥ r` (the bottom height over radius `r`).
fn bottom_height_at(domain: &MeridianDomain, r: f64) -> Option<f64> {
    if r <= domain.floor_radius() {
        return Some(domain.y0);
    }
    if r > domain.r0 {
        return None;
    }
    let (mut lo, mut hi) = (domain.y0, 0.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if domain.radius_at(mid) >= r {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

fn angle_from_anchor(h0: f64, r: f64, y: f64) -> f64 {
    r.atan2(-(y + h0))
}

/// Samples the radial function on `n_angles` uniformly spaced angles in `[0, π]`.
pub fn star_rep(domain: &MeridianDomain, params: &ClassParams, n_angles: usize) -> Result<StarRep> {
    if n_angles < 2 {
        return Err(SloshError::InvalidParameter(format!(
            "need at least two angles, got {n_angles}"
        )));
    }
    check_class(domain, params)?;
    let h0 = params.anchor_depth();
    let corner_angle = FRAC_PI_2 + (h0 / domain.r0).atan();
    let floor_r = domain.floor_radius();
    let floor_end_angle = angle_from_anchor(h0, floor_r, domain.y0);
    let floor_depth = -(domain.y0 + h0);

    let alpha_grid: Vec<f64> = (0..n_angles)
        .map(|i| PI * i as f64 / (n_angles - 1) as f64)
        .collect();
    let f_values: Vec<f64> = alpha_grid
        .iter()
        .map(|&a| {
            if a >= corner_angle {
                -h0 / a.cos()
            } else if a <= floor_end_angle {
                floor_depth / a.cos()
            } else {
                // the polar angle increases along the bottom graph
                let (mut lo, mut hi) = (domain.y0, 0.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if angle_from_anchor(h0, domain.radius_at(mid), mid) < a {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-16 {
                        break;
                    }
                }
                let y = 0.5 * (lo + hi);
                // put the point on the ray to remove the residual angular error
                let r = domain.radius_at(y);

                (r * r + (y + h0) * (y + h0)).sqrt()
            }
        })
        .collect();
    let step = PI / (n_angles - 1) as f64;
    let lipschitz_bound = f_values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / step)
        .fold(0.0, f64::max);
    Ok(StarRep {
        p0: (0.0, -h0),
        h0,
        alpha_grid,
        f_values,
        lipschitz_bound,
    })
}

/// Sup-norm distance between two radial functions on a shared grid.
pub fn distance(a: &StarRep, b: &StarRep) -> Result<f64> {
    if a.h0 != b.h0 || a.p0 != b.p0 {
        return Err(SloshError::IncompatibleRepresentation(format!(
            "anchors differ: h0 = {} vs {}",
            a.h0, b.h0
        )));
    }
    if a.alpha_grid != b.alpha_grid {
        return Err(SloshError::IncompatibleRepresentation(format!(
            "angle grids differ ({} vs {} points)",
            a.alpha_grid.len(),
            b.alpha_grid.len()
        )));
    }
    Ok(a.f_values
        .iter()
        .zip(&b.f_values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Domain descriptor of the CLI mini-language.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Cylinder { h: f64 },
    Cone { lambda: f64 },
    Troesch { lambda: f64 },
    Bulge { d: f64 },
    Hemisphere,
    ProfileFile { path: String },
}

impl DomainSpec {
    pub fn build(&self) -> Result<MeridianDomain> {
        match self {
            DomainSpec::Cylinder { h } => make_cylinder(*h),
            DomainSpec::Cone { lambda } => make_cone(*lambda),
            DomainSpec::Troesch { lambda } => make_troesch(*lambda),
            DomainSpec::Bulge { d } => make_spherical_bulge(*d),
            DomainSpec::Hemisphere => Ok(make_hemisphere()),
            DomainSpec::ProfileFile { path } => {
                let samples = crate::io::read_profile_csv(Path::new(path))?;
                make_named_profile(&format!("profile:file={path}"), &samples)
            }
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Cylinder { h } => write!(f, "cylinder:h={h}"),
            DomainSpec::Cone { lambda } => write!(f, "cone:lambda={lambda}"),
            DomainSpec::Troesch { lambda } => write!(f, "troesch:lambda={lambda}"),
            DomainSpec::Bulge { d } => write!(f, "bulge:d={d}"),
            DomainSpec::Hemisphere => write!(f, "hemisphere"),
            DomainSpec::ProfileFile { path } => write!(f, "profile:file={path}"),
        }
    }
}

impl FromStr for DomainSpec {
    type Err = SloshError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let value = |key: &str| -> Result<String> {
            let arg = arg.ok_or_else(|| {
                SloshError::Parse(format!("'{s}': expected '{kind}:{key}=<value>'"))
            })?;
            let (k, v) = arg
                .split_once('=')
                .ok_or_else(|| SloshError::Parse(format!("'{s}': expected '{key}=<value>'")))?;
            if k.trim() != key {
                return Err(SloshError::Parse(format!(
                    "'{s}': unknown parameter '{k}', expected '{key}'"
                )));
            }
            Ok(v.trim().to_string())
        };
        let number = |key: &str| -> Result<f64> {
            let v = value(key)?;
            v.parse::<f64>()
                .map_err(|_| SloshError::Parse(format!("'{s}': '{v}' is not a number")))
        };
        match kind {
            "cylinder" => Ok(DomainSpec::Cylinder { h: number("h")? }),
            "cone" => Ok(DomainSpec::Cone {
                lambda: number("lambda")?,
            }),
            "troesch" => Ok(DomainSpec::Troesch {
                lambda: number("lambda")?,
            }),
            "bulge" => Ok(DomainSpec::Bulge { d: number("d")? }),
            "hemisphere" if arg.is_none() => Ok(DomainSpec::Hemisphere),
            "profile" => Ok(DomainSpec::ProfileFile {
                path: value("file")?,
            }),
            _ => Err(SloshError::Parse(format!("unknown domain '{s}'"))),
        }
    }
}

/// Parses and builds a domain from the mini-language.
pub fn parse_domain(spec: &str) -> Result<MeridianDomain> {
    spec.parse::<DomainSpec>()?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cylinder_is_constant() {
        let d = make_cylinder(1.0).unwrap();
        assert!(d.profile().g_samples().iter().all(|&g| g == 1.0));
        assert_eq!(d.contact_angle(), FRAC_PI_2);
        assert!(d.john() && d.convex() && d.monotone());
        let half = make_cylinder(0.5).unwrap();
        assert_eq!(half.y0(), -0.5);
        assert_eq!(half.r0(), 1.0);
        assert!(make_cylinder(2.0).unwrap().john());
        assert!(matches!(
            make_cylinder(0.0),
            Err(SloshError::InvalidParameter(_))
        ));
        assert!(make_cylinder(-1.0).is_err());
    }

    #[test]
    fn cone_profile() {
        let d = make_cone(2.0).unwrap();
        assert_eq!(d.y0(), -0.5);
        assert_eq!(d.radius_at(0.0), 1.0);
        assert!(close(d.radius_at(-0.2), 0.6, 1e-15));
        assert_eq!(make_cone(1.0).unwrap().y0(), -0.25);
        assert!(d.convex() && d.john());
        assert!(make_cone(2.5).is_err());
        assert!(make_cone(0.0).is_err());
    }

    #[test]
    fn troesch_profile() {
        let d = make_troesch(1.0).unwrap();
        let expected = -1.0 + 3f64.sqrt() / 2.0;
        assert!(close(d.y0(), expected, 1e-15));
        let y = d.y0();
        assert!((4.0 * y * y + 8.0 * y + 1.0).abs() < 1e-15);
        assert_eq!(d.radius_at(0.0), 1.0);
        assert!(d.john() && d.convex() && d.monotone());
        let t2 = make_troesch(2.0).unwrap();
        let c2 = make_cone(2.0).unwrap();
        assert!(close(t2.y0(), c2.y0(), 1e-15));
        for i in 0..=100 {
            let y = -0.5 * i as f64 / 100.0;
            assert!(close(t2.radius_at(y), c2.radius_at(y), 1e-12));
        }
        assert!(make_troesch(3.0).is_err());
    }

    #[test]
    fn troesch_lies_inside_cone() {
        for &lambda in &[0.1, 0.5, 1.0, 1.5, 2.0] {
            let t = make_troesch(lambda).unwrap();
            let c = make_cone(lambda).unwrap();
            for i in 0..=2000 {
                let y = t.y0() * i as f64 / 2000.0;
                assert!(t.radius_at(y) <= c.radius_at(y) + 1e-14);
            }
            assert!(t.is_contained_in(&c));
            assert!(c.is_contained_in(&make_cylinder(lambda / 4.0).unwrap()));
        }
    }

    #[test]
    fn bulge_geometry() {
        let d = make_spherical_bulge(1.0).unwrap();
        assert!(close(d.contact_angle(), 3.0 * PI / 4.0, 1e-15));
        assert!(!d.john());
        assert!(close(d.radius_at(-1.0), 2f64.sqrt(), 1e-15));
        let bottom = -1.0 - 2f64.sqrt();
        assert!(close(d.y0(), bottom, 1e-15));
        assert_eq!(d.radius_at(bottom), 0.0);
        // one-sided finite difference of g at the surface
        let h = 1e-6;
        let slope = (d.radius_at(0.0) - d.radius_at(-h)) / h;
        assert!(close(
            contact_angle_from_slope(slope),
            d.contact_angle(),
            1e-5
        ));
        let thin = make_spherical_bulge(1e-8).unwrap();
        assert!(close(thin.contact_angle(), FRAC_PI_2, 1e-7));
        assert!(make_spherical_bulge(0.0).is_err());
    }

    #[test]
    fn two_sample_profile_equals_cylinder() {
        let p = make_profile(&[(-1.0, 1.0), (0.0, 1.0)]).unwrap();
        let c = make_cylinder(1.0).unwrap();
        assert_eq!(p.y0(), c.y0());
        assert_eq!(p.r0(), c.r0());
        assert_eq!(p.contact_angle(), c.contact_angle());
        for i in 0..=10 {
            let y = -(i as f64) / 10.0;
            assert_eq!(p.radius_at(y), c.radius_at(y));
        }
    }

    #[test]
    fn sampled_hemisphere() {
        let samples: Vec<(f64, f64)> = (0..101)
            .map(|i| {
                let y = -1.0 + i as f64 / 100.0;
                let y = if i == 100 { 0.0 } else { y };
                (y, (1.0 - y * y).max(0.0).sqrt())
            })
            .collect();
        let d = make_profile(&samples).unwrap();
        assert!(d.convex());
        assert!(d.john());
        assert!(close(d.contact_angle(), FRAC_PI_2, 1e-6));
    }

    #[test]
    fn decreasing_profile_is_rejected() {
        let err = make_profile(&[(-1.0, 0.5), (0.0, 0.4)]).unwrap_err();
        assert!(
            matches!(err, SloshError::ClassViolation { index: 1, .. }),
            "{err}"
        );
        assert!(matches!(
            make_profile(&[]),
            Err(SloshError::InvalidParameter(_))
        ));
        assert!(make_profile(&[(-1.0, 0.5), (-0.5, 0.6)]).is_err());
    }

    #[test]
    fn steps_become_ramps() {
        let d = make_profile(&[(-1.0, 0.5), (-0.5, 0.5), (-0.5, 1.0), (0.0, 1.0)]).unwrap();
        let ys = d.profile().y_samples();
        assert!(ys.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(d.radius_at(-0.5), 0.5);
        assert_eq!(d.radius_at(-0.25), 1.0);
        assert!(close(d.radius_at(-0.375), 0.75, 1e-15));
        assert!(make_profile(&[(-1.0, 0.5), (0.0, 0.5), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn deformation_family() {
        let t = make_troesch(1.0).unwrap();
        let s0 = deform(&t, 0.0).unwrap();
        assert!(s0.profile().g_samples().iter().all(|&g| g == 1.0));
        assert!(close(s0.y0(), t.y0(), 0.0));
        assert!(close(-s0.y0(), 0.133_97, 1e-5));
        assert_eq!(deform(&t, 1.0).unwrap(), t);
        let c = make_cone(2.0).unwrap();
        let half = deform(&c, 0.5).unwrap();
        for i in 0..=50 {
            let y = -0.5 * i as f64 / 50.0;
            assert!(close(half.radius_at(y), 1.0 + y, 1e-15));
        }
        assert!(deform(&t, 1.5).is_err());
        let wide = make_cylinder(1.0).unwrap().scaled(2.0).unwrap();
        assert!(matches!(
            deform(&wide, 0.5),
            Err(SloshError::UnsupportedDomain(_))
        ));
    }

    #[test]
    fn deformation_is_affine() {
        let t = make_troesch(0.7).unwrap();
        for &(s, u) in &[(0.2, 0.6), (0.1, 0.9), (0.5, 0.75)] {
            let a = deform(&t, s).unwrap();
            let b = deform(&t, u).unwrap();
            let mid = deform(&t, 0.5 * (s + u)).unwrap();
            for i in 0..=100 {
                let y = t.y0() * i as f64 / 100.0;
                let avg = 0.5 * (a.radius_at(y) + b.radius_at(y));
                assert!(close(mid.radius_at(y), avg, 1e-15));
            }
            assert!(mid.john());
        }
    }

    #[test]
    fn domain_spec_round_trip() {
        for text in [
            "cylinder:h=1",
            "cone:lambda=2",
            "troesch:lambda=0.5",
            "bulge:d=1",
            "hemisphere",
        ] {
            let spec: DomainSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
            assert_eq!(spec.build().unwrap().name(), text);
        }
        assert!("cylinder:h=-1"
            .parse::<DomainSpec>()
            .unwrap()
            .build()
            .is_err());
        assert!("cylinder:lambda=1".parse::<DomainSpec>().is_err());
        assert!("sphere".parse::<DomainSpec>().is_err());
        assert!("cone:lambda=abc".parse::<DomainSpec>().is_err());
    }

    /// Ray–rectangle intersection for the cylinder `(0,1) × (−h, 0)` seen from `(0, −h0)`.
    fn cylinder_ray(h: f64, h0: f64, alpha: f64) -> f64 {
        let (dr, dy) = (alpha.sin(), -alpha.cos());
        let mut best = f64::INFINITY;
        if dy > 0.0 {
            best = best.min(h0 / dy);
        }
        if dy < 0.0 {
            best = best.min((h - h0) / -dy);
        }
        if dr > 0.0 {
            best = best.min(1.0 / dr);
        }
        best
    }

    #[test]
    fn cylinder_star_rep() {
        let params = ClassParams::new(0.5, 1.0, 2.0, 1.0).unwrap();
        let rep = star_rep(&make_cylinder(1.0).unwrap(), &params, 257).unwrap();
        assert_eq!(rep.h0, 0.25);
        assert!(close(*rep.f_values.last().unwrap(), 0.25, 1e-15));
        assert!(close(rep.f_values[0], 0.75, 1e-15));
        for (i, &a) in rep.alpha_grid.iter().enumerate() {
            assert!(
                close(rep.f_values[i], cylinder_ray(1.0, 0.25, a), 1e-12),
                "angle {a}"
            );
        }
        assert!(rep
            .f_values
            .iter()
            .all(|&f| (0.25..=1.0 + 2.0 + 0.5).contains(&f)));
    }

    #[test]
    fn star_rep_points_lie_on_boundary() {
        let t = make_troesch(1.0).unwrap();
        let params = ClassParams::new(0.05, 5.0, 1.0, 1.0).unwrap();
        let rep = star_rep(&t, &params, 1024).unwrap();
        for i in 0..rep.f_values.len() {
            let (r, y) = rep.boundary_point(i);
            let on_surface = y.abs() < 1e-12 && r <= 1.0 + 1e-12;
            let on_bottom = (r - t.radius_at(y)).abs() < 1e-9;
            assert!(on_surface || on_bottom, "point {i}: ({r}, {y})");
        }
        // the bottom curve stays at least eps/2 from the anchor; the free
        // surface comes as close as h0
        let corner = FRAC_PI_2 + rep.h0.atan();
        let hi = 1.0 + params.depth_bound + params.eps;
        for (&a, &f) in rep.alpha_grid.iter().zip(&rep.f_values) {
            assert!(f <= hi);
            assert!(f >= rep.h0 - 1e-15);
            if a < corner {
                assert!(f >= params.eps / 2.0);
            }
        }
    }

    #[test]
    fn cylinder_distance_matches_ray_gap() {
        let params = ClassParams::new(0.5, 1.0, 2.0, 1.0).unwrap();
        let a = star_rep(&make_cylinder(1.0).unwrap(), &params, 513).unwrap();
        let b = star_rep(&make_cylinder(1.2).unwrap(), &params, 513).unwrap();
        let brute = a
            .alpha_grid
            .iter()
            .map(|&al| (cylinder_ray(1.0, 0.25, al) - cylinder_ray(1.2, 0.25, al)).abs())
            .fold(0.0, f64::max);
        let d = distance(&a, &b).unwrap();
        assert!(d > 0.0);
        assert!(close(d, brute, 1e-12));
        assert_eq!(distance(&a, &a).unwrap(), 0.0);
        let coarse = star_rep(&make_cylinder(1.0).unwrap(), &params, 65).unwrap();
        assert!(matches!(
            distance(&a, &coarse),
            Err(SloshError::IncompatibleRepresentation(_))
        ));
    }

    #[test]
    fn deformation_distance_shrinks() {
        let t = make_troesch(1.0).unwrap();
        let params = ClassParams::new(0.05, 5.0, 1.0, 1.0).unwrap();
        let base = star_rep(&t, &params, DEFAULT_ANGLES).unwrap();
        let mut last = f64::INFINITY;
        for &s in &[0.9, 0.99, 0.999] {
            let rep = star_rep(&deform(&t, s).unwrap(), &params, DEFAULT_ANGLES).unwrap();
            let d = distance(&rep, &base).unwrap();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn class_check_rejects_non_members() {
        let params = ClassParams::new(0.05, 5.0, 1.0, 1.0).unwrap();
        let bulge = make_spherical_bulge(1.0).unwrap();
        assert!(matches!(
            star_rep(&bulge, &params, 16),
            Err(SloshError::ClassViolation { .. })
        ));
        // slope 4 at the surface exceeds M = 2
        let tight = ClassParams::new(0.05, 2.0, 1.0, 1.0).unwrap();
        assert!(star_rep(&make_troesch(1.0).unwrap(), &tight, 16).is_err());
        assert!(ClassParams::new(1.5, 1.0, 2.0, 1.0).is_err());
        assert!(ClassParams::new(0.5, 0.5, 2.0, 1.0).is_err());
    }
}
