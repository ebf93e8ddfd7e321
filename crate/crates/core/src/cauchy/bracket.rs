//! The bracket `{U₁, U₂}(λ, p)`: an integral over the circle of shifts
//! `ξ(φ)` of `U₁` at `(k, −ξ)` times `U₂` at `(k+ξ, p+ξ)`.
//!
//! With the ball cutoff the integrand vanishes unless `|ξ| < R` and
//! `|p+ξ| < R`. Along the circle `|ξ|² = 4a² sin²(φ/2)` and
//! `|p+ξ|² = 2a² + (|p|²−2a²) cos φ + 2 p·k⊥ sin φ` with `a = |Re k|`, so the
//! support is a union of arcs whose end points are found in closed form.
//! Each arc gets its own Gauss–Legendre rule. The uncut form integrates the
//! smooth periodic integrand with the trapezoid rule instead.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{AmplitudeSource, FieldError};
use crate::geometry::{z_coords_on, CVec3, Frame, GeometryError, ShiftCircle, TOL_GEOM};
use crate::quadrature::gauss_legendre;
use crate::scatter::ForwardSolver;

/// Bracket value with the count of integration nodes that were dropped.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BracketValue {
    pub value: Complex64,
    /// Nodes whose evaluation point fell outside the field domain.
    pub skipped: usize,
    pub evaluated: usize,
}

/// `(|p|/2)((|λ|²−1)/(λ̄|λ|))(cos φ − 1) − (|p|/λ̄) sin φ`.
pub fn bracket_weight(lambda: Complex64, p_norm: f64, phi: f64) -> Complex64 {
    let l = lambda.norm();
    let lb = lambda.conj();
    let (s, c) = phi.sin_cos();
    0.5 * p_norm * (l * l - 1.0) / (lb * l) * (c - 1.0) - p_norm / lb * s
}

/// `b(μ, |λ|, |p|)` for constants `b = [b₁, b₂, b₃]`.
pub fn bracket_bound(b: [f64; 3], lambda_abs: f64, p_norm: f64) -> f64 {
    let l = lambda_abs;
    let q = 1.0 + p_norm * (l + 1.0 / l);
    b[0] * l / (l * l + 1.0).powi(2) + b[1] * p_norm * (l * l - 1.0).abs() / (l * l * q * q)
        + b[2] * p_norm / (l * q)
}

/// Arcs of `[−π, π]` on which both `|ξ(φ)| < r` and `|p+ξ(φ)| < r`.
pub fn support_windows(circle: &ShiftCircle, frame: &Frame, r: f64) -> Vec<(f64, f64)> {
    mask_windows(circle, frame, r, MaskSide::Inside, MaskSide::Inside)
}

/// Arcs on which `−ξ` lies on `side1` and `p+ξ` on `side2` of the sphere
/// `|·| = r`.
pub fn mask_windows(
    circle: &ShiftCircle,
    frame: &Frame,
    r: f64,
    side1: MaskSide,
    side2: MaskSide,
) -> Vec<(f64, f64)> {
    let a = circle.radius();
    let ca = 2.0 * a * a;
    let b = frame.p_norm * frame.p_norm - ca;
    let c = 2.0 * frame.p.dot(circle.k_perp());
    let mut cuts = vec![-PI, PI];
    if r < 2.0 * a {
        let phi1 = 2.0 * (r / (2.0 * a)).asin();
        cuts.extend([-phi1, phi1]);
    }
    let d = b.hypot(c);
    if d > 0.0 {
        let kappa = (r * r - ca) / d;
        if kappa.abs() < 1.0 {
            // |p+ξ|² − r² = d·cos(φ − ψ) − d·κ changes sign at ψ ± β.
            let psi = c.atan2(b);
            let beta = kappa.acos();
            for base in [psi + beta, psi - beta] {
                for n in -2..=2 {
                    let x = base + 2.0 * PI * n as f64;
                    if x > -PI && x < PI {
                        cuts.push(x);
                    }
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let member = |phi: f64| {
        let xi = circle.xi(phi);
        let in1 = xi.norm() < r;
        let in2 = (frame.p + xi).norm() < r;
        in1 == (side1 == MaskSide::Inside) && in2 == (side2 == MaskSide::Inside)
    };
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let (l, h) = (w[0], w[1]);
        if h - l <= 1e-15 || !member(0.5 * (l + h)) {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.1 == l => last.1 = h,
            _ => out.push((l, h)),
        }
    }
    out
}

/// Gauss–Legendre over the given arcs with about `n_phi` nodes in total.
pub fn bracket_on_windows<A: AmplitudeSource + ?Sized, B: AmplitudeSource + ?Sized>(
    u1: &A,
    u2: &B,
    lambda: Complex64,
    frame: &Frame,
    windows: &[(f64, f64)],
    n_phi: usize,
) -> Result<BracketValue, FieldError> {
    let circle = ShiftCircle::new(lambda, frame)?;
    let total: f64 = windows.iter().map(|w| w.1 - w.0).sum();
    let mut out = BracketValue::default();
    for &(l, h) in windows {
        let n = ((n_phi as f64 * (h - l) / total).round() as usize).max(4);
        let rule = gauss_legendre(n);
        for (phi, w) in rule.mapped(l, h) {
            match integrand(u1, u2, &circle, lambda, frame, phi, false)? {
                Some(v) => {
                    out.value += w * v;
                    out.evaluated += 1;
                }
                None => out.skipped += 1,
            }
        }
    }
    out.value *= -PI / 4.0;
    Ok(out)
}

/// Bracket with the ball cutoff of radius `cutoff`, Gauss–Legendre on the
/// support arcs with about `n_phi` nodes in total.
pub fn bracket<A: AmplitudeSource + ?Sized, B: AmplitudeSource + ?Sized>(
    u1: &A,
    u2: &B,
    lambda: Complex64,
    frame: &Frame,
    cutoff: f64,
    n_phi: usize,
) -> Result<BracketValue, FieldError> {
    let circle = ShiftCircle::new(lambda, frame)?;
    let windows = support_windows(&circle, frame, cutoff);
    bracket_on_windows(u1, u2, lambda, frame, &windows, n_phi)
}

/// Bracket without cutoff: periodic trapezoid over `φ ∈ [−π, π]`.
pub fn bracket_uncut<A: AmplitudeSource + ?Sized, B: AmplitudeSource + ?Sized>(
    u1: &A,
    u2: &B,
    lambda: Complex64,
    frame: &Frame,
    n_phi: usize,
) -> Result<BracketValue, FieldError> {
    trapezoid(u1, u2, lambda, frame, n_phi, false)
}

/// Uncut bracket evaluated through the ambient points `(k, −ξ)` and
/// `(k+ξ, p+ξ)` instead of their λ-coordinates.
pub fn bracket_kform<A: AmplitudeSource + ?Sized, B: AmplitudeSource + ?Sized>(
    u1: &A,
    u2: &B,
    lambda: Complex64,
    frame: &Frame,
    n_phi: usize,
) -> Result<BracketValue, FieldError> {
    trapezoid(u1, u2, lambda, frame, n_phi, true)
}

fn trapezoid<A: AmplitudeSource + ?Sized, B: AmplitudeSource + ?Sized>(
    u1: &A,
    u2: &B,
    lambda: Complex64,
    frame: &Frame,
    n_phi: usize,
    kform: bool,
) -> Result<BracketValue, FieldError> {
    let circle = ShiftCircle::new(lambda, frame)?;
    let h = 2.0 * PI / n_phi as f64;
    let mut out = BracketValue::default();
    // φ = 0 has zero weight and a degenerate shift; start half a step off.
    for j in 0..n_phi {
        let phi = -PI + (j as f64 + 0.5) * h;
        match integrand(u1, u2, &circle, lambda, frame, phi, kform)? {
            Some(v) => {
                out.value += v;
                out.evaluated += 1;
            }
            None => out.skipped += 1,
        }
    }
    out.value *= -PI / 4.0 * h;
    Ok(out)
}

fn integrand<A: AmplitudeSource + ?Sized, B: AmplitudeSource + ?Sized>(
    u1: &A,
    u2: &B,
    circle: &ShiftCircle,
    lambda: Complex64,
    frame: &Frame,
    phi: f64,
    kform: bool,
) -> Result<Option<Complex64>, FieldError> {
    let z = match z_coords_on(circle, frame, phi, SHIFT_CONE) {
        Ok(z) => z,
        Err(GeometryError::ShiftDegenerate) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let (a, b) = if kform {
        (
            u1.eval_kp(circle.k, &z.frame_minus_xi),
            u2.eval_kp(circle.k + z.xi, &z.frame_shift),
        )
    } else {
        (
            u1.eval(z.z1, &z.frame_minus_xi),
            u2.eval(z.z2, &z.frame_shift),
        )
    };
    match (a, b) {
        (Ok(a), Ok(b)) => Ok(Some(bracket_weight(lambda, frame.p_norm, phi) * a * b)),
        (Err(FieldError::OutOfDomain), _) | (_, Err(FieldError::OutOfDomain)) => Ok(None),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

// Shifted momenta only need to avoid the axis itself; the cone guard
// applies to grid momenta, not to integration points.
const SHIFT_CONE: f64 = TOL_GEOM;

/// The forward model as a source: `H(k, p)` after `iterations` Neumann steps.
pub struct ModelSource<'a> {
    pub solver: &'a ForwardSolver,
    pub iterations: usize,
}

impl AmplitudeSource for ModelSource<'_> {
    fn eval(&self, lambda: Complex64, frame: &Frame) -> Result<Complex64, FieldError> {
        let k = crate::geometry::k_from_lambda(lambda, frame)?;
        self.eval_kp(k, frame)
    }

    fn eval_kp(&self, k: CVec3, frame: &Frame) -> Result<Complex64, FieldError> {
        Ok(self.solver.amplitude_kp(k, frame.p, self.iterations)?.value)
    }
}

/// Which part of momentum space a [`Masked`] source keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskSide {
    /// `|p| < radius` (the `χ` part).
    Inside,
    /// `|p| ≥ radius` (the `1 − χ` part).
    Outside,
}

/// `χ_r U` or `(1 − χ_r) U`.
pub struct Masked<'a, S: AmplitudeSource + ?Sized> {
    pub inner: &'a S,
    pub radius: f64,
    pub side: MaskSide,
}

impl<S: AmplitudeSource + ?Sized> Masked<'_, S> {
    fn keeps(&self, frame: &Frame) -> bool {
        let inside = frame.p_norm < self.radius;
        inside == (self.side == MaskSide::Inside)
    }
}

impl<S: AmplitudeSource + ?Sized> AmplitudeSource for Masked<'_, S> {
    fn eval(&self, lambda: Complex64, frame: &Frame) -> Result<Complex64, FieldError> {
        if self.keeps(frame) {
            self.inner.eval(lambda, frame)
        } else {
            Ok(Complex64::new(0.0, 0.0))
        }
    }

    fn eval_kp(&self, k: CVec3, frame: &Frame) -> Result<Complex64, FieldError> {
        if self.keeps(frame) {
            self.inner.eval_kp(k, frame)
        } else {
            Ok(Complex64::new(0.0, 0.0))
        }
    }
}
