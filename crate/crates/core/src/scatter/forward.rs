//! Neumann iteration of the zero-energy amplitude equation
//! `H(k,p) = v̂(p) − ∫ v̂(p+ξ) H(k,−ξ) / (ξ² + 2k·ξ) dξ`.
//!
//! The denominator vanishes on the circle `S_k` (centre `−Re k`, radius
//! `a = |Re k|`, in the plane orthogonal to `Im k`). Around that circle we
//! use coordinates `(t, α, φ)`: φ turns about the axis of the circle and
//! `(t, α)` are polar coordinates in the meridian half-plane centred on the
//! circle. There `ξ² + 2k·ξ = t(t + 2a e^{iα})` and the volume element is
//! `s t dt dα dφ`, so the factor `t` cancels and the integrand is bounded.
//! For a pair of Gaussians the φ-integral is `2π I₀(·)` in closed form,
//! which leaves a smooth two-dimensional integral.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PotentialModel, ScatterError};
use crate::geometry::{CVec3, OmegaPoint, Vec3};
use crate::quadrature::{gauss_legendre, Rule};
use crate::special::i0_scaled_arg;

/// Quadrature controls for the forward integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Gauss nodes in the meridian distance `t`.
    pub n_t: usize,
    /// Nodes in the meridian angle `α`.
    pub n_alpha: usize,
    /// Minimum φ-nodes for corrections beyond the first (no closed form there).
    pub n_phi: usize,
    /// Relative disagreement allowed between successive refinements.
    pub tol_fwd: f64,
    /// Extra refinement levels tried before giving up.
    pub max_refinements: usize,
    /// Compare against a refined rule and report the difference.
    pub check: bool,
    /// Gaussian tail level below which the ξ-integral is truncated.
    pub tail: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            n_t: 24,
            n_alpha: 24,
            n_phi: 48,
            tol_fwd: 1e-4,
            max_refinements: 2,
            check: true,
            tail: 1e-12,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), ScatterError> {
        if self.n_t < 2 || self.n_alpha < 4 || self.n_phi < 8 {
            return Err(ScatterError::InvalidModel("forward quadrature too coarse".into()));
        }
        if !(self.tol_fwd > 0.0) || !(self.tail > 0.0 && self.tail < 1.0) {
            return Err(ScatterError::InvalidModel("tol_fwd and tail must be positive".into()));
        }
        Ok(())
    }
}

/// An amplitude value with the forward solver's own error estimate
/// (difference between the last two refinement levels; zero if unchecked).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardValue {
    pub value: Complex64,
    pub error: f64,
}

#[derive(Clone, Copy, Debug)]
struct Pair {
    /// Product of the spectral amplitudes.
    kk: f64,
    /// `w_i² + w_j²`.
    alpha: f64,
    wi2: f64,
    ci: Vec3,
    dc: Vec3,
}

/// Orthonormal basis adapted to `k`: `e1 = Re k/a`, `e2 = Im k/a`, `e3 = e1×e2`.
#[derive(Clone, Copy, Debug)]
struct KBasis {
    a: f64,
    e1: Vec3,
    e2: Vec3,
    e3: Vec3,
}

impl KBasis {
    fn new(k: CVec3) -> Result<Self, ScatterError> {
        let re = k.re();
        let im = k.im();
        let a = re.norm();
        let b = im.norm();
        if !(a > 0.0 && b > 0.0) {
            return Err(ScatterError::DegenerateK);
        }
        let e1 = re / a;
        let e2 = im / b;
        Ok(Self {
            a,
            e1,
            e2,
            e3: e1.cross(e2),
        })
    }

    fn point(&self, s: f64, phi: f64, z: f64) -> Vec3 {
        let (sp, cp) = phi.sin_cos();
        self.e1 * (s * cp - self.a) + self.e3 * (s * sp) + self.e2 * z
    }
}

/// Meridian pieces `(α-interval, rule kind)` for truncation radius `t_max`.
enum Pieces {
    /// `t_max ≤ a`: a full periodic α range.
    Full,
    /// `t_max > a`: `|α| ≤ α*` with constant `t_max`, and the rest limited by `s ≥ 0`.
    Split(f64),
}

fn pieces(a: f64, t_max: f64) -> Pieces {
    if t_max <= a {
        Pieces::Full
    } else {
        Pieces::Split((-a / t_max).acos())
    }
}

/// Calls `f(t, α, weight)` for every node of the meridian rule.
fn for_meridian_nodes(
    a: f64,
    t_max: f64,
    rt: &Rule,
    ra: &Rule,
    mut f: impl FnMut(f64, f64, f64),
) {
    match pieces(a, t_max) {
        Pieces::Full => {
            let n = ra.len();
            let h = 2.0 * PI / n as f64;
            for j in 0..n {
                let al = -PI + (j as f64 + 0.5) * h;
                for (t, wt) in rt.mapped(0.0, t_max) {
                    f(t, al, wt * h);
                }
            }
        }
        Pieces::Split(astar) => {
            for (al, wa) in ra.mapped(-astar, astar) {
                for (t, wt) in rt.mapped(0.0, t_max) {
                    f(t, al, wt * wa);
                }
            }
            for (al, wa) in ra.mapped(astar, 2.0 * PI - astar) {
                let tm = (a / -al.cos()).min(t_max);
                for (t, wt) in rt.mapped(0.0, tm) {
                    f(t, al, wt * wa);
                }
            }
        }
    }
}

/// Forward solver bound to one potential and quadrature configuration.
#[derive(Clone, Debug)]
pub struct ForwardSolver {
    model: PotentialModel,
    pairs: Vec<Pair>,
    config: QuadratureConfig,
    levels: Vec<(Rule, Rule)>,
    cut: f64,
    scale: f64,
}

impl ForwardSolver {
    pub fn new(model: &PotentialModel, config: &QuadratureConfig) -> Result<Self, ScatterError> {
        model.validate()?;
        config.validate()?;
        let mut pairs = Vec::new();
        for ti in &model.terms {
            for tj in &model.terms {
                let kk = ti.spectral_amplitude() * tj.spectral_amplitude();
                if kk == 0.0 {
                    continue;
                }
                let wi2 = ti.width * ti.width;
                pairs.push(Pair {
                    kk,
                    alpha: wi2 + tj.width * tj.width,
                    wi2,
                    ci: ti.center,
                    dc: ti.center - tj.center,
                });
            }
        }
        let levels = (0..=config.max_refinements + 1)
            .map(|l| {
                let f = 1.5f64.powi(l as i32);
                (
                    gauss_legendre((config.n_t as f64 * f).round() as usize),
                    gauss_legendre((config.n_alpha as f64 * f).round() as usize),
                )
            })
            .collect();
        let amp: f64 = model
            .terms
            .iter()
            .map(|t| t.spectral_amplitude().abs())
            .sum();
        let sig = model.max_spectral_width().max(1.0);
        Ok(Self {
            model: model.clone(),
            pairs,
            config: config.clone(),
            levels,
            cut: (2.0 * (1.0 / config.tail).ln()).sqrt(),
            scale: 1e-12 * amp + 1e-10 * amp * amp * sig * sig,
        })
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    /// `H(k, p)` on the variety after `iterations` Neumann steps.
    pub fn amplitude(&self, point: &OmegaPoint, iterations: usize) -> Result<ForwardValue, ScatterError> {
        self.amplitude_kp(point.k, point.p, iterations)
    }

    /// `H(k, p)` for `k² = 0` and arbitrary real `p` (the equation is posed
    /// for all `p`, not only on the variety).
    pub fn amplitude_kp(
        &self,
        k: CVec3,
        p: Vec3,
        iterations: usize,
    ) -> Result<ForwardValue, ScatterError> {
        if iterations == 0 || self.pairs.is_empty() {
            return Ok(ForwardValue {
                value: self.model.vhat(p),
                error: 0.0,
            });
        }
        let basis = KBasis::new(k)?;
        let mut prev = self.iterate(&basis, p, iterations, 0);
        if !self.config.check {
            return Ok(ForwardValue {
                value: prev,
                error: 0.0,
            });
        }
        let mut last_diff = f64::INFINITY;
        for level in 1..self.levels.len() {
            let next = self.iterate(&basis, p, iterations, level);
            let diff = (next - prev).norm();
            let allowed = self.config.tol_fwd * next.norm() + self.scale;
            if diff <= allowed {
                return Ok(ForwardValue {
                    value: next,
                    error: diff,
                });
            }
            prev = next;
            last_diff = diff;
        }
        Err(ScatterError::QuadratureFailure {
            estimate: last_diff,
            tolerance: self.config.tol_fwd * prev.norm() + self.scale,
        })
    }

    fn iterate(&self, basis: &KBasis, p: Vec3, n: usize, level: usize) -> Complex64 {
        let mut v = self.model.vhat(p);
        if n >= 1 {
            v += self.second_order(basis, p, level);
        }
        if n >= 2 {
            v += self.higher_order(basis, p, n, level);
        }
        v
    }

    /// `−∫ v̂(p+ξ) v̂(−ξ) / (ξ² + 2k·ξ) dξ` with the φ-integral in closed form.
    fn second_order(&self, b: &KBasis, p: Vec3, level: usize) -> Complex64 {
        let (rt, ra) = &self.levels[level];
        let a = b.a;
        let pn = p.norm();
        let p2 = p.norm2();
        let mut total = Complex64::new(0.0, 0.0);
        for pr in &self.pairs {
            let bvec = |e: Vec3| Complex64::new(-pr.wi2 * p.dot(e), pr.dc.dot(e));
            let b1 = bvec(b.e1);
            let b2 = bvec(b.e2);
            let b3 = bvec(b.e3);
            let c0 = Complex64::new(-0.5 * pr.wi2 * p2, p.dot(pr.ci));
            let pp = pr.alpha * a + b1;
            let ww = (pp * pp + b3 * b3).sqrt();
            let t_max = pr.wi2 * pn / pr.alpha + self.cut / pr.alpha.sqrt();
            let e_const = c0 - a * b1 - 0.5 * pr.alpha * a * a;
            let mut acc = Complex64::new(0.0, 0.0);
            for_meridian_nodes(a, t_max, rt, ra, |t, al, w| {
                let (sa, ca) = al.sin_cos();
                let s = a + t * ca;
                if s <= 0.0 {
                    return;
                }
                let z = t * sa;
                let (wp, i0s) = i0_scaled_arg(ww * s);
                let e = e_const - 0.5 * pr.alpha * (s * s + z * z) + z * b2 + wp;
                let den = Complex64::new(t + 2.0 * a * ca, 2.0 * a * sa);
                acc += w * s * e.exp() * i0s / den;
            });
            total += pr.kk * 2.0 * PI * acc;
        }
        -total
    }

    /// Terms beyond the first correction: `−∫ v̂(p+ξ) [H_{n−1}(k,−ξ) − v̂(−ξ)] / D dξ`
    /// with a plain trapezoid in φ. Cost grows quickly with `n`.
    fn higher_order(&self, b: &KBasis, p: Vec3, n: usize, level: usize) -> Complex64 {
        let (rt, ra) = &self.levels[level];
        let a = b.a;
        let wmax = self.model.terms.iter().map(|t| t.width).fold(0.0, f64::max);
        let smax = self.model.max_spectral_width();
        let t_max = p.norm() + self.cut * smax;
        let n_phi = {
            let want = (8.0 * (a + t_max) * wmax.max(1.0 / smax.max(1e-300))).ceil() as usize;
            let m = self.config.n_phi.max(want).min(1024);
            m + m % 2
        };
        let hphi = 2.0 * PI / n_phi as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for_meridian_nodes(a, t_max, rt, ra, |t, al, w| {
            let (sa, ca) = al.sin_cos();
            let s = a + t * ca;
            if s <= 0.0 {
                return;
            }
            let z = t * sa;
            let den = Complex64::new(t + 2.0 * a * ca, 2.0 * a * sa);
            let mut ring = Complex64::new(0.0, 0.0);
            for j in 0..n_phi {
                let phi = -PI + (j as f64 + 0.5) * hphi;
                let xi = b.point(s, phi, z);
                let f = self.model.vhat(p + xi);
                if f.norm() == 0.0 {
                    continue;
                }
                let inner = self.iterate(b, -xi, n - 1, level) - self.model.vhat(-xi);
                ring += f * inner;
            }
            acc += w * hphi * s * ring / den;
        });
        -acc
    }
}

/// Convenience wrapper: `H(k, p)` on the variety.
pub fn faddeev_h(
    model: &PotentialModel,
    point: &OmegaPoint,
    iterations: usize,
    quad: &QuadratureConfig,
) -> Result<Complex64, ScatterError> {
    Ok(ForwardSolver::new(model, quad)?
        .amplitude(point, iterations)?
        .value)
}
