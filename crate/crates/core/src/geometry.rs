//! Zero-energy geometry: the variety `k² = 0, p² = 2k·p`, its `(λ, p)`
//! coordinates, the circle of shifts used by the bracket, and region tests
//! for the λ-domains and their boundary circles.
//!
//! All complex dot products are bilinear (`k·k = Σ k_i²`, no conjugation).

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative tolerance for membership checks.
pub const TOL_GEOM: f64 = 1e-10;

/// Default half-angle (radians) of the excluded cone around the axis `ν`.
pub const DEFAULT_CONE_HALF_ANGLE: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("momentum {0} lies inside the excluded cone around the axis")]
    AxisDegenerate(Vec3),
    #[error("lambda = 0 has no preimage")]
    ZeroLambda,
    #[error("point is off the zero-energy variety (relative residual {0:.3e})")]
    NotOnVariety(f64),
    #[error("shift is degenerate (zero shift or shifted momentum on the axis)")]
    ShiftDegenerate,
    #[error("zero momentum has no lambda coordinates")]
    ZeroMomentum,
    #[error("invalid region parameters: {0}")]
    InvalidParams(String),
}

/// Real 3-vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn unit(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Complex 3-vector.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CVec3 {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl CVec3 {
    pub const fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        Self { x, y, z }
    }

    pub fn from_parts(re: Vec3, im: Vec3) -> Self {
        Self::new(
            Complex64::new(re.x, im.x),
            Complex64::new(re.y, im.y),
            Complex64::new(re.z, im.z),
        )
    }

    pub fn re(self) -> Vec3 {
        Vec3::new(self.x.re, self.y.re, self.z.re)
    }

    pub fn im(self) -> Vec3 {
        Vec3::new(self.x.im, self.y.im, self.z.im)
    }

    /// Bilinear product `Σ a_i b_i`.
    pub fn dot(self, o: CVec3) -> Complex64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn dot_real(self, v: Vec3) -> Complex64 {
        self.x * v.x + self.y * v.y + self.z * v.z
    }

    /// `(|Re k|² + |Im k|²)^{1/2}`.
    pub fn norm(self) -> f64 {
        (self.re().norm2() + self.im().norm2()).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.re().is_finite() && self.im().is_finite()
    }
}

impl Add for CVec3 {
    type Output = CVec3;
    fn add(self, o: CVec3) -> CVec3 {
        CVec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Add<Vec3> for CVec3 {
    type Output = CVec3;
    fn add(self, o: Vec3) -> CVec3 {
        CVec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for CVec3 {
    type Output = CVec3;
    fn sub(self, o: CVec3) -> CVec3 {
        CVec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<Complex64> for Vec3 {
    type Output = CVec3;
    fn mul(self, s: Complex64) -> CVec3 {
        CVec3::new(s * self.x, s * self.y, s * self.z)
    }
}

/// A point `(k, p)` of the zero-energy variety.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaPoint {
    pub k: CVec3,
    pub p: Vec3,
}

impl OmegaPoint {
    /// Builds the point after checking both defining equations.
    pub fn new(k: CVec3, p: Vec3) -> Result<Self, GeometryError> {
        let (r1, r2) = variety_residuals(k, p);
        let r = r1.max(r2);
        if !(r <= TOL_GEOM) {
            return Err(GeometryError::NotOnVariety(r));
        }
        Ok(Self { k, p })
    }

    pub fn from_lambda(lambda: Complex64, frame: &Frame) -> Result<Self, GeometryError> {
        Ok(Self {
            k: k_from_lambda(lambda, frame)?,
            p: frame.p,
        })
    }
}

/// Relative residuals of `k² = 0` and `p² = 2k·p`.
pub fn variety_residuals(k: CVec3, p: Vec3) -> (f64, f64) {
    let kk = k.norm();
    let r1 = k.dot(k).norm() / (1.0 + kk * kk);
    let pp = p.norm2();
    let r2 = (pp - 2.0 * k.dot_real(p)).norm() / (1.0 + pp + 2.0 * kk * p.norm());
    (r1, r2)
}

/// Orthonormal frame `(θ, ω)` attached to a momentum `p` and axis `ν`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub p: Vec3,
    pub theta: Vec3,
    pub omega: Vec3,
    pub nu: Vec3,
    pub p_norm: f64,
}

/// `θ = ν×p/|ν×p|`, `ω = p×θ/|p|`.
///
/// Fails with [`GeometryError::AxisDegenerate`] when `|ν×p|/|p|` is below
/// `sin(cone_half_angle)`.
pub fn make_frame(p: Vec3, nu: Vec3, cone_half_angle: f64) -> Result<Frame, GeometryError> {
    let p_norm = p.norm();
    if !(p_norm > 0.0) || !p.is_finite() {
        return Err(GeometryError::ZeroMomentum);
    }
    let c = nu.cross(p);
    let cn = c.norm();
    if !(cn > cone_half_angle.sin() * p_norm) {
        return Err(GeometryError::AxisDegenerate(p));
    }
    let theta = c / cn;
    let omega = p.cross(theta) / p_norm;
    Ok(Frame {
        p,
        theta,
        omega,
        nu,
        p_norm,
    })
}

/// `k = κ₁θ + κ₂ω + p/2` with `κ₁ = (i|p|/4)(λ+1/λ)`, `κ₂ = (|p|/4)(λ−1/λ)`.
pub fn k_from_lambda(lambda: Complex64, frame: &Frame) -> Result<CVec3, GeometryError> {
    if lambda == Complex64::new(0.0, 0.0) || !lambda.is_finite() {
        return Err(GeometryError::ZeroLambda);
    }
    let inv = lambda.inv();
    let q = frame.p_norm / 4.0;
    let k1 = Complex64::i() * q * (lambda + inv);
    let k2 = q * (lambda - inv);
    Ok(frame.theta * k1 + frame.omega * k2 + frame.p * 0.5)
}

/// `λ = 2k·(θ+iω)/(i|p|) = i|p|/(2k·(θ−iω))` without any membership check.
/// The larger of the two projections is used, so small `|λ|` keeps its digits.
pub fn lambda_from_k_unchecked(k: CVec3, frame: &Frame) -> Complex64 {
    let a = k.dot_real(frame.theta);
    let b = Complex64::i() * k.dot_real(frame.omega);
    let (plus, minus) = (a + b, a - b);
    let ip = Complex64::i() * frame.p_norm;
    if plus.norm() >= minus.norm() {
        2.0 * plus / ip
    } else {
        ip / (2.0 * minus)
    }
}

/// Inverse of [`k_from_lambda`]; checks that `(k, p)` lies on the variety.
pub fn lambda_from_k(k: CVec3, frame: &Frame) -> Result<Complex64, GeometryError> {
    let (r1, r2) = variety_residuals(k, frame.p);
    let r = r1.max(r2);
    if !(r <= TOL_GEOM) {
        return Err(GeometryError::NotOnVariety(r));
    }
    Ok(lambda_from_k_unchecked(k, frame))
}

/// `(|p|/4)(|λ|+1/|λ|)`, equal to both `|Im k|` and `|Re k|`.
pub fn im_k_norm(lambda: Complex64, p_norm: f64) -> f64 {
    let a = lambda.norm();
    0.25 * p_norm * (a + 1.0 / a)
}

/// The circle `S_k` of real shifts `ξ` with `ξ² + 2k·ξ = 0`, parametrised by φ.
#[derive(Clone, Copy, Debug)]
pub struct ShiftCircle {
    pub k: CVec3,
    re_k: Vec3,
    k_perp: Vec3,
}

impl ShiftCircle {
    pub fn new(lambda: Complex64, frame: &Frame) -> Result<Self, GeometryError> {
        let k = k_from_lambda(lambda, frame)?;
        let re_k = k.re();
        let im_k = k.im();
        let k_perp = im_k.cross(re_k) / im_k.norm();
        Ok(Self { k, re_k, k_perp })
    }

    /// `ξ(φ) = Re k (cos φ − 1) + k⊥ sin φ`.
    pub fn xi(&self, phi: f64) -> Vec3 {
        let (s, c) = phi.sin_cos();
        self.re_k * (c - 1.0) + self.k_perp * s
    }

    pub fn re_k(&self) -> Vec3 {
        self.re_k
    }

    pub fn k_perp(&self) -> Vec3 {
        self.k_perp
    }

    /// Radius of the circle, `|Re k|`.
    pub fn radius(&self) -> f64 {
        self.re_k.norm()
    }
}

pub fn xi_shift(lambda: Complex64, frame: &Frame, phi: f64) -> Result<Vec3, GeometryError> {
    Ok(ShiftCircle::new(lambda, frame)?.xi(phi))
}

/// The two evaluation points of the bracket for one shift ξ.
#[derive(Clone, Copy, Debug)]
pub struct ZCoords {
    /// λ-coordinate of `(k, −ξ)`.
    pub z1: Complex64,
    /// λ-coordinate of `(k+ξ, p+ξ)`.
    pub z2: Complex64,
    pub xi: Vec3,
    /// `p + ξ`.
    pub p_shift: Vec3,
    pub frame_minus_xi: Frame,
    pub frame_shift: Frame,
}

/// Bracket evaluation coordinates for a precomputed circle and shift angle.
pub fn z_coords_on(
    circle: &ShiftCircle,
    frame: &Frame,
    phi: f64,
    cone_half_angle: f64,
) -> Result<ZCoords, GeometryError> {
    let xi = circle.xi(phi);
    if !(xi.norm() > 1e-14 * (1.0 + frame.p_norm)) {
        return Err(GeometryError::ShiftDegenerate);
    }
    let p_shift = frame.p + xi;
    let fm = make_frame(-xi, frame.nu, cone_half_angle).map_err(|_| GeometryError::ShiftDegenerate)?;
    let fs =
        make_frame(p_shift, frame.nu, cone_half_angle).map_err(|_| GeometryError::ShiftDegenerate)?;
    let z1 = lambda_from_k_unchecked(circle.k, &fm);
    let z2 = lambda_from_k_unchecked(circle.k + xi, &fs);
    Ok(ZCoords {
        z1,
        z2,
        xi,
        p_shift,
        frame_minus_xi: fm,
        frame_shift: fs,
    })
}

pub fn z_coords(
    lambda: Complex64,
    frame: &Frame,
    phi: f64,
    cone_half_angle: f64,
) -> Result<ZCoords, GeometryError> {
    let circle = ShiftCircle::new(lambda, frame)?;
    z_coords_on(&circle, frame, phi, cone_half_angle)
}

/// Which λ-chart a point belongs to: `|λ| < 1` or `|λ| > 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hemisphere {
    Plus,
    Minus,
}

impl Hemisphere {
    pub const BOTH: [Hemisphere; 2] = [Hemisphere::Plus, Hemisphere::Minus];

    pub fn index(self) -> usize {
        match self {
            Hemisphere::Plus => 0,
            Hemisphere::Minus => 1,
        }
    }

    pub fn sign(self) -> char {
        match self {
            Hemisphere::Plus => '+',
            Hemisphere::Minus => '-',
        }
    }
}

/// Bounded chart coordinate: `u = λ` on the `+` side, `u = 1/λ` on the `−` side.
pub fn to_chart(lambda: Complex64) -> (Hemisphere, Complex64) {
    if lambda.norm_sqr() <= 1.0 {
        (Hemisphere::Plus, lambda)
    } else {
        (Hemisphere::Minus, lambda.inv())
    }
}

pub fn from_chart(hemi: Hemisphere, u: Complex64) -> Complex64 {
    match hemi {
        Hemisphere::Plus => u,
        Hemisphere::Minus => u.inv(),
    }
}

/// Chart radius `u ∈ (0, 1]` with `(u + 1/u)/4 = q`, for `q ≥ 1/2`.
pub fn level_radius(q: f64) -> f64 {
    let d = (4.0 * q * q - 1.0).max(0.0).sqrt();
    1.0 / (2.0 * q + d)
}

/// Radius of the boundary circle `T_r^+`: the smaller root of `x² − 4rx + 1 = 0`.
pub fn boundary_radius(r: f64) -> f64 {
    level_radius(r)
}

/// Region parameters `ρ`, `τ`, axis `ν` and the cone guard around it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub rho: f64,
    pub tau: f64,
    pub nu: Vec3,
    pub cone_half_angle: f64,
}

impl RegionParams {
    pub fn new(rho: f64, tau: f64) -> Result<Self, GeometryError> {
        let p = Self {
            rho,
            tau,
            nu: Vec3::new(0.0, 0.0, 1.0),
            cone_half_angle: DEFAULT_CONE_HALF_ANGLE,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidParams(m.to_string()));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive and finite");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0, 1)");
        }
        if !((self.nu.norm() - 1.0).abs() <= 1e-12) {
            return bad("nu must be a unit vector");
        }
        if !(self.cone_half_angle > 0.0 && self.cone_half_angle < std::f64::consts::FRAC_PI_2) {
            return bad("cone_half_angle must lie in (0, pi/2)");
        }
        Ok(())
    }

    /// Radius `2τρ` of the momentum ball.
    pub fn ball_radius(&self) -> f64 {
        2.0 * self.tau * self.rho
    }

    pub fn frame(&self, p: Vec3) -> Result<Frame, GeometryError> {
        make_frame(p, self.nu, self.cone_half_angle)
    }

    pub fn in_cone(&self, p: Vec3) -> bool {
        self.nu.cross(p).norm() <= self.cone_half_angle.sin() * p.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    DPlus,
    DMinus,
    TPlus,
    TMinus,
    Lambda,
    BoundaryLambda,
}

/// Evaluates the defining inequalities of the λ-domains with `r = ρ/|p|`.
pub fn in_region(
    lambda: Complex64,
    p: Vec3,
    params: &RegionParams,
    region: Region,
) -> Result<bool, GeometryError> {
    let pn = p.norm();
    if !(pn > 0.0) {
        return Err(GeometryError::ZeroMomentum);
    }
    let a = lambda.norm();
    if !(a > 0.0) {
        return Ok(false);
    }
    let r = params.rho / pn;
    let level = 0.25 * (a + 1.0 / a);
    let on_level = (level - r).abs() <= 1e-9 * r;
    let inside = level > r && !on_level;
    let ball = pn < params.ball_radius() && !params.in_cone(p);
    Ok(match region {
        Region::DPlus => inside && a < 1.0,
        Region::DMinus => inside && a > 1.0,
        Region::TPlus => on_level && a <= 1.0,
        Region::TMinus => on_level && a >= 1.0,
        Region::Lambda => inside && a != 1.0 && ball,
        Region::BoundaryLambda => on_level && ball,
    })
}
