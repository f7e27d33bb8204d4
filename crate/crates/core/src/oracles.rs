//! Closed-form reference solutions.
//!
//! Bessel functions of the first kind (orders 0 and 1) are evaluated from
//! their power series. Terms alternate in sign and grow to roughly
//! `e^|x| / |x|` before decaying, so the series is summed in double-double
//! arithmetic; the cancellation then costs digits of the ~32-digit working
//! precision instead of the 16 digits of an `f64`. Past |x| = 40 even that is
//! not enough for 1e-13 absolute accuracy, and the series is summed exactly in
//! big-integer fixed point.

use crate::error::{Result, SloshError};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

/// Largest |x| accepted by [`bessel_j`].
pub const BESSEL_MAX_ARG: f64 = 50.0;

/// Unevaluated sum `hi + lo` with |lo| ≤ ulp(hi)/2.
#[derive(Clone, Copy, Debug)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: err }
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Self {
            hi: s,
            lo: b - (s - a),
        }
    }

    fn two_prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Self {
            hi: p,
            lo: a.mul_add(b, -p),
        }
    }

    fn add(self, other: Self) -> Self {
        let s = Self::two_sum(self.hi, other.hi);
        let t = Self::two_sum(self.lo, other.lo);
        let u = Self::quick_two_sum(s.hi, s.lo + t.hi);
        Self::quick_two_sum(u.hi, u.lo + t.lo)
    }

    fn mul(self, other: Self) -> Self {
        let p = Self::two_prod(self.hi, other.hi);
        let lo = p.lo + (self.hi * other.lo + self.lo * other.hi);
        Self::quick_two_sum(p.hi, lo)
    }

    fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        let p = Self::two_prod(q1, d);
        let r = Self::two_sum(self.hi, -p.hi);
        let rem = (r.hi + (r.lo - p.lo)) + self.lo;
        let q2 = rem / d;
        Self::quick_two_sum(q1, q2)
    }

    fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Bessel function of the first kind `J_order(x)` for `order ∈ {0, 1}`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if order > 1 {
        return Err(SloshError::Range(format!(
            "Bessel order {order} not supported (only 0 and 1)"
        )));
    }
    if !x.is_finite() || x.abs() > BESSEL_MAX_ARG {
        return Err(SloshError::Range(format!(
            "|x| = {} exceeds the series range {BESSEL_MAX_ARG}",
            x.abs()
        )));
    }
    Ok(bessel_series(order, x))
}

const FIXED_POINT_THRESHOLD: f64 = 40.0;
const FIXED_POINT_BITS: i64 = 256;

fn bessel_series(order: u32, x: f64) -> f64 {
    if x.abs() > FIXED_POINT_THRESHOLD {
        bessel_series_fixed_point(order, x)
    } else {
        bessel_series_double_double(order, x)
    }
}

/// Splits a finite nonzero `x` into `mantissa · 2^exponent`.
fn decompose(x: f64) -> (i64, i64) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let fraction = (bits & ((1u64 << 52) - 1)) as i64;
    let (mantissa, exponent) = if biased == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1i64 << 52), biased - 1075)
    };
    (sign * mantissa, exponent)
}

fn shift(value: BigInt, by: i64) -> BigInt {
    if by >= 0 {
        value << (by as u64)
    } else {
        value >> ((-by) as u64)
    }
}

fn bessel_series_fixed_point(order: u32, x: f64) -> f64 {
    let (mantissa, exponent) = decompose(x);
    // (x/2)² = mantissa² · 2^(2·exponent − 2)
    let mantissa_sq = BigInt::from(mantissa) * BigInt::from(mantissa);
    let q_shift = 2 * exponent - 2;
    let mut term = if order == 0 {
        BigInt::from(1) << (FIXED_POINT_BITS as u64)
    } else {
        shift(BigInt::from(mantissa), exponent - 1 + FIXED_POINT_BITS)
    };
    let mut sum = term.clone();
    let n = u64::from(order);
    let mut k = 0u64;
    loop {
        k += 1;
        term = shift(term * &mantissa_sq, q_shift) / BigInt::from(k * (k + n));
        term = -term;
        if term.is_zero() {
            break;
        }
        sum += &term;
    }
    let scaled = sum.to_f64().unwrap_or(f64::NAN);
    scaled * 2f64.powi(-(FIXED_POINT_BITS as i32))
}

fn bessel_series_double_double(order: u32, x: f64) -> f64 {
    let half = 0.5 * x; // exact
    let q = DoubleDouble::two_prod(half, half);
    let mut term = if order == 0 {
        DoubleDouble::from_f64(1.0)
    } else {
        DoubleDouble::from_f64(half)
    };
    let mut sum = term;
    let n = f64::from(order);
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        term = term.mul(q).div_f64(k).div_f64(k + n).neg();
        sum = sum.add(term);
        if k > half.abs() + 2.0 && term.hi.abs() <= 1e-34 * sum.hi.abs().max(1e-300) {
            break;
        }
        if term.hi == 0.0 || k > 400.0 {
            break;
        }
    }
    sum.to_f64()
}

/// Derivative `J₁′(x) = J₀(x) − J₁(x)/x`.
pub fn bessel_j1_prime(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.5);
    }
    Ok(bessel_j(0, x)? - bessel_j(1, x)? / x)
}

/// First positive zeros needed by the cylinder closed forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesselTable {
    /// First positive zero of `J₀`.
    pub j01: f64,
    /// First positive zero of `J₁′`.
    pub j11p: f64,
}

const NEWTON_TOL: f64 = 1e-13;

fn newton(mut x: f64, f: impl Fn(f64) -> (f64, f64)) -> Result<f64> {
    for _ in 0..60 {
        let (value, slope) = f(x);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let step = value / slope;
        x -= step;
        if step.abs() <= NEWTON_TOL {
            return Ok(x);
        }
    }
    Err(SloshError::Numeric(format!(
        "Newton iteration did not converge near {x}"
    )))
}

/// Newton iteration for `j₀,₁` and `j′₁,₁` from their tabulated four-digit seeds.
pub fn bessel_zeros() -> Result<BesselTable> {
    let j01 = newton(2.4048, |x| (bessel_series(0, x), -bessel_series(1, x)))?;
    let j11p = newton(1.8412, |x| {
        let j0 = bessel_series(0, x);
        let j1 = bessel_series(1, x);
        let d1 = j0 - j1 / x;
        let d2 = -d1 / x - (1.0 - 1.0 / (x * x)) * j1;
        (d1, d2)
    })?;
    Ok(BesselTable { j01, j11p })
}

/// Cylinder closed forms for the unit free surface and depth `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylinderSpectrum {
    /// Fundamental sloshing eigenvalue of mode m = 1.
    pub nu11: f64,
    /// First axisymmetric Dirichlet–Steklov eigenvalue.
    pub nu01_ds: f64,
    /// `nu11 < j′₁,₁` holds.
    pub nu11_below_j11p: bool,
    /// `nu01_ds > j₀,₁` holds.
    pub nu01_ds_above_j01: bool,
}

pub fn cylinder_spectrum(h: f64) -> Result<CylinderSpectrum> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(SloshError::InvalidParameter(format!(
            "cylinder depth must be positive, got {h}"
        )));
    }
    let table = bessel_zeros()?;
    let nu11 = table.j11p * (table.j11p * h).tanh();
    let nu01_ds = table.j01 / (table.j01 * h).tanh();
    Ok(CylinderSpectrum {
        nu11,
        nu01_ds,
        nu11_below_j11p: nu11 < table.j11p,
        nu01_ds_above_j01: nu01_ds > table.j01,
    })
}

const POINT_TOL: f64 = 1e-9;

/// Unnormalized fundamental m = 1 cylinder eigenfunction `J₁(j′r) cosh(j′(y + h))`.
pub fn cylinder_psi11(r: f64, y: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(SloshError::InvalidParameter(format!(
            "cylinder depth must be positive, got {h}"
        )));
    }
    if !(-POINT_TOL..=1.0 + POINT_TOL).contains(&r) || y > POINT_TOL || y < -h - POINT_TOL {
        return Err(SloshError::Range(format!(
            "({r}, {y}) outside the cylinder meridian of depth {h}"
        )));
    }
    let j = bessel_zeros()?.j11p;
    Ok(bessel_j(1, j * r)? * (j * (y + h)).cosh())
}

/// Unnormalized first axisymmetric Dirichlet–Steklov cylinder eigenfunction
/// `J₀(j₀,₁ r) sinh(j₀,₁ (y + h))`.
pub fn cylinder_ds01(r: f64, y: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(SloshError::InvalidParameter(format!(
            "cylinder depth must be positive, got {h}"
        )));
    }
    if !(-POINT_TOL..=1.0 + POINT_TOL).contains(&r) || y > POINT_TOL || y < -h - POINT_TOL {
        return Err(SloshError::Range(format!(
            "({r}, {y}) outside the cylinder meridian of depth {h}"
        )));
    }
    let j = bessel_zeros()?.j01;
    Ok(bessel_j(0, j * r)? * (j * (y + h)).sinh())
}

fn check_troesch_point(r: f64, y: f64, lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 2.0) {
        return Err(SloshError::InvalidParameter(format!(
            "Troesch parameter must lie in (0, 2], got {lambda}"
        )));
    }
    // 4y² + 8y/λ + 1 in factored form; the expanded sum cancels near the apex
    let lower_root = (-8.0 / lambda - (64.0 / (lambda * lambda) - 16.0).max(0.0).sqrt()) / 8.0;
    let upper_root = 0.25 / lower_root;
    let g2 = 4.0 * (y - lower_root) * (y - upper_root);
    let inside = y <= POINT_TOL && r >= -POINT_TOL && g2 >= -POINT_TOL && r * r <= g2 + POINT_TOL;
    if !inside || y < lower_root {
        return Err(SloshError::Range(format!(
            "({r}, {y}) outside the Troesch meridian for lambda = {lambda}"
        )));
    }
    Ok(())
}

/// Troesch eigenfunction `1 + λy + 4y² − 2r² + (4/3)λy³ − 2λr²y` with eigenvalue `λ`.
pub fn troesch_eigenfunction(r: f64, y: f64, lambda: f64) -> Result<f64> {
    check_troesch_point(r, y, lambda)?;
    let r2 = r * r;
    Ok(
        1.0 + lambda * y + 4.0 * y * y - 2.0 * r2 + (4.0 / 3.0) * lambda * y * y * y
            - 2.0 * lambda * r2 * y,
    )
}

/// Stokes stream function of the Troesch eigenfunction,
/// `(λ/2)(r² − r⁴) + 4r²y + 2λr²y²`; zero on the axis and on the bottom.
pub fn troesch_stream(r: f64, y: f64, lambda: f64) -> Result<f64> {
    check_troesch_point(r, y, lambda)?;
    let r2 = r * r;
    Ok(0.5 * lambda * (r2 - r2 * r2) + 4.0 * r2 * y + 2.0 * lambda * r2 * y * y)
}
