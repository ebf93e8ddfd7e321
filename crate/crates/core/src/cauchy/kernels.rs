//! The radial kernels `u₁, u₂, u₃` that control the bracket, their weighted
//! Cauchy integrals over `D^±_r`, and the closed-form bounds for `D⁺`.
//!
//! Integrals use polar coordinates centred at the singular point `λ`, so the
//! `1/|ζ−λ|` factor cancels against the area element. Each ray is split at
//! the domain boundary and at its closest approach to the origin (where
//! `|ζ|` has a kink), and the angle is split at the directions where the ray
//! passes through the origin or grazes the excluded disk. Grazing rays give a
//! square-root kink in angle, absorbed by a quadratic change of variable.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::geometry::level_radius;
use crate::quadrature::{gauss_legendre, Rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    U1,
    U2,
    U3,
}

impl Kernel {
    pub const ALL: [Kernel; 3] = [Kernel::U1, Kernel::U2, Kernel::U3];
}

/// `u_j(ζ, s)` as a function of `|ζ|`.
pub fn kernel_u(kernel: Kernel, zeta_abs: f64, s: f64) -> f64 {
    let z = zeta_abs;
    match kernel {
        Kernel::U1 => z / (z * z + 1.0).powi(2),
        Kernel::U2 => {
            let q = 1.0 + s * (z + 1.0 / z);
            (z * z + 1.0) * s / (z * z * q * q)
        }
        Kernel::U3 => s / (z * (1.0 + s * (z + 1.0 / z))),
    }
}

/// Closed-form bound of `∬_{D⁺_{ρ/|p|}} u_j(ζ,|p|) dA/|ζ−λ|`.
pub fn kernel_bound(kernel: Kernel, rho: f64, p_norm: f64) -> f64 {
    match kernel {
        Kernel::U1 => 0.75 * PI * (p_norm / rho).powi(2),
        Kernel::U2 => 4.0 * PI / rho,
        Kernel::U3 => 2.0 * PI * p_norm / rho,
    }
}

// Integral of f along ζ = λ + t e^{iθ} for t in [t0, t1], split at `extra`.
fn ray_integral(
    f: &dyn Fn(f64) -> f64,
    t0: f64,
    t1: f64,
    extra: &[f64],
    rule: &Rule,
) -> f64 {
    let mut cuts = vec![t0, t1];
    cuts.extend(extra.iter().copied().filter(|&x| x > t0 && x < t1));
    cuts.sort_by(f64::total_cmp);
    let mut s = 0.0;
    for w in cuts.windows(2) {
        s += rule.mapped(w[0], w[1]).map(|(t, wt)| wt * f(t)).sum::<f64>();
    }
    s
}

// Semi-infinite ray piece via t = t0 + L·x/(1−x).
fn ray_tail(f: &dyn Fn(f64) -> f64, t0: f64, scale: f64, rule: &Rule) -> f64 {
    rule.mapped(0.0, 1.0)
        .map(|(x, w)| {
            let d = 1.0 - x;
            w * scale * f(t0 + scale * x / d) / (d * d)
        })
        .sum()
}

// Cuts at `centre ± h·2^j` up to distance `reach`.
fn graded(centre: f64, h: f64, reach: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut d = h;
    while d > 0.0 && d < reach {
        out.push(centre - d);
        out.push(centre + d);
        d *= 2.0;
    }
    out
}

// Panels touching a `sqrt_at` angle get θ = a + (b−a)y², which removes a
// square-root endpoint singularity.
fn angular_integral(cuts: &mut Vec<f64>, sqrt_at: &[f64], base: f64, n: usize, g: impl Fn(f64) -> f64) -> f64 {
    let wrap = |mut c: f64| {
        while c < base {
            c += 2.0 * PI;
        }
        while c > base + 2.0 * PI {
            c -= 2.0 * PI;
        }
        c
    };
    let singular: Vec<f64> = sqrt_at.iter().map(|&c| wrap(c)).collect();
    cuts.extend_from_slice(&singular);
    cuts.push(base);
    cuts.push(base + 2.0 * PI);
    for c in cuts.iter_mut() {
        *c = wrap(*c);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let is_singular = |x: f64| singular.iter().any(|&c| (c - x).abs() < 1e-14);
    let rule = gauss_legendre(n);
    let graded_panel = |a: f64, b: f64| -> f64 {
        rule.mapped(0.0, 1.0)
            .map(|(y, w)| w * 2.0 * (b - a).abs() * y * g(a + (b - a) * y * y))
            .sum()
    };
    let mut s = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        s += match (is_singular(a), is_singular(b)) {
            (false, false) => rule.mapped(a, b).map(|(th, wt)| wt * g(th)).sum::<f64>(),
            (true, false) => graded_panel(a, b),
            (false, true) => graded_panel(b, a),
            (true, true) => {
                let m = 0.5 * (a + b);
                graded_panel(a, m) + graded_panel(b, m)
            }
        };
    }
    s
}

/// `∬_{D⁺_r} u_j(ζ, s) dA/|ζ−λ|` for `λ ∈ D⁺_r`; `n` nodes per panel.
pub fn kernel_integral_dplus(kernel: Kernel, r: f64, s: f64, lambda: Complex64, n: usize) -> f64 {
    let big_r = level_radius(r);
    let l2 = lambda.norm_sqr();
    let base = (-lambda).arg();
    let rule = gauss_legendre(n);
    angular_integral(&mut Vec::new(), &[], base, n, |th| {
        let e = Complex64::from_polar(1.0, th);
        let b = (lambda.conj() * e).re;
        let t_max = -b + (b * b + big_r * big_r - l2).max(0.0).sqrt();
        let f = |t: f64| kernel_u(kernel, (lambda + t * e).norm(), s);
        ray_integral(&f, 0.0, t_max, &[-b], &rule)
    })
}

/// `∬_{D⁻_r} u_j(ζ, s) (|λ|/|ζ|) dA/|ζ−λ|` for `λ ∈ D⁻_r`.
///
/// Far from the excluded disk the mass sits near the origin, inside a thin
/// angular wedge, so both directions get graded cuts around it.
pub fn kernel_integral_dminus(kernel: Kernel, r: f64, s: f64, lambda: Complex64, n: usize) -> f64 {
    // D⁻_r is |ζ| > 1/R.
    let rin = 1.0 / level_radius(r);
    let l = lambda.norm();
    let l2 = l * l;
    let base = (-lambda).arg();
    let half = (rin / l).clamp(-1.0, 1.0).asin();
    let mut cuts = graded(base, 2.0 * half, PI);
    let (rule, tail) = (gauss_legendre(n), gauss_legendre(2 * n));
    angular_integral(&mut cuts, &[base - half, base + half], base, n, |th| {
        let e = Complex64::from_polar(1.0, th);
        let b = (lambda.conj() * e).re;
        let f = |t: f64| {
            let z = (lambda + t * e).norm();
            kernel_u(kernel, z, s) * l / z
        };
        let t_star = -b;
        let d = (l2 - b * b).max(0.0).sqrt();
        let disc = rin * rin - d * d;
        if b < 0.0 && disc > 0.0 {
            // The ray crosses the excluded disk on [t_in, t_out].
            let sq = disc.sqrt();
            let (t_in, t_out) = (t_star - sq, t_star + sq);
            let before: Vec<f64> = graded(t_in, rin, t_in).into_iter().filter(|&x| x < t_in).collect();
            let end = t_out + l;
            let after: Vec<f64> = graded(t_out, rin, l).into_iter().filter(|&x| x > t_out).collect();
            ray_integral(&f, 0.0, t_in, &before, &rule)
                + ray_integral(&f, t_out, end, &after, &rule)
                + ray_tail(&f, end, l, &tail)
        } else if t_star > 0.0 {
            let h = d.max(rin);
            let end = 2.0 * t_star + l;
            ray_integral(&f, 0.0, end, &graded(t_star, h, t_star + l), &rule) + ray_tail(&f, end, l, &tail)
        } else {
            ray_tail(&f, 0.0, l, &tail)
        }
    })
}
