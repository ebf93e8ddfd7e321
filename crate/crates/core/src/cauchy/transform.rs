//! Boundary and area Cauchy transforms.
//!
//! The boundary transform expands the samples on `T^±` (in the chart `u`)
//! into the non-negative Fourier modes `c_q`, so that the Cauchy integral
//! becomes `Σ_{q≥0} c_q (u/R₊)^q`. Unlike the trapezoid rule applied to the
//! Cauchy kernel directly, this stays accurate up to the contour, where
//! `T_b` is evaluated. The two agree to rounding for band-limited data.
//!
//! Area transforms use a midpoint rule on cells between consecutive rings
//! and ring angles; targets sit on the ring nodes, so sources and targets
//! never coincide.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{bracket, AmplitudeField, AmplitudeSource, FieldError};
use crate::geometry::{from_chart, to_chart, Frame, Hemisphere, RegionParams, Vec3};
use crate::grid::{LambdaGrid, MomentumGrid};
use crate::quadrature::gauss_legendre;
use crate::scatter::ScatteringData;

/// Relative inward offset used for the one-sided boundary limit.
pub const T_B_OFFSET: f64 = 1e-6;

/// Non-negative Fourier modes of every boundary circle.
#[derive(Clone, Debug)]
pub struct BoundaryTransform {
    n_modes: usize,
    /// Layout `[node][hemisphere][mode]`.
    coeffs: Vec<Complex64>,
    radii: Vec<f64>,
}

/// `c_q = (1/M) Σ_j v_j e^{−2πiqj/M}` for `q = 0..=M/2`, Nyquist mode halved.
fn circle_modes(samples: &[Complex64]) -> Vec<Complex64> {
    let m = samples.len();
    let nq = m / 2 + 1;
    let tw: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / m as f64))
        .collect();
    (0..nq)
        .map(|q| {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, v) in samples.iter().enumerate() {
                s += v * tw[(q * j) % m];
            }
            let c = s / m as f64;
            if 2 * q == m {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

fn eval_modes(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &cq| acc * z + cq)
}

impl BoundaryTransform {
    pub fn new(data: &ScatteringData) -> Self {
        let n = data.momentum.len();
        let m = data.n_boundary();
        let n_modes = m / 2 + 1;
        let coeffs = (0..n)
            .into_par_iter()
            .flat_map_iter(|node| {
                Hemisphere::BOTH
                    .into_iter()
                    .flat_map(move |h| circle_modes(data.circle(node, h)))
            })
            .collect();
        let radii = (0..n).map(|node| data.circle_radius(node)).collect();
        Self {
            n_modes,
            coeffs,
            radii,
        }
    }

    pub fn modes(&self, node: usize, hemi: Hemisphere) -> &[Complex64] {
        let s = (node * 2 + hemi.index()) * self.n_modes;
        &self.coeffs[s..s + self.n_modes]
    }

    pub fn radius(&self, node: usize) -> f64 {
        self.radii[node]
    }

    /// Mean of the data on the circle, i.e. `(1/2πi)∮ H dζ/ζ`.
    pub fn mean(&self, node: usize, hemi: Hemisphere) -> Complex64 {
        self.modes(node, hemi)[0]
    }

    /// Cauchy transform at chart point `u` with `|u| ≤ R₊`.
    pub fn eval_chart(&self, node: usize, hemi: Hemisphere, u: Complex64) -> Complex64 {
        eval_modes(self.modes(node, hemi), u / self.radii[node])
    }
}

fn node_of(momentum: &MomentumGrid, p: Vec3) -> Result<usize, FieldError> {
    momentum.find(p).ok_or(FieldError::MomentumOffGrid(p))
}

/// `H⁰(λ, p)` from boundary data, for `p` on the momentum grid and `λ`
/// inside `D^±`.
pub fn cauchy_boundary(data: &ScatteringData, lambda: Complex64, p: Vec3) -> Result<Complex64, FieldError> {
    let node = node_of(&data.momentum, p)?;
    let (hemi, u) = to_chart(lambda);
    let r = data.circle_radius(node);
    if !(u.norm() < r) {
        return Err(FieldError::OutOfDomain);
    }
    Ok(eval_modes(&circle_modes(data.circle(node, hemi)), u / r))
}

/// Trapezoid rule applied to the Cauchy integrals as written, on the data
/// nodes. Reference for [`cauchy_boundary`].
pub fn cauchy_boundary_trapezoid(
    data: &ScatteringData,
    lambda: Complex64,
    p: Vec3,
) -> Result<Complex64, FieldError> {
    let node = node_of(&data.momentum, p)?;
    let (hemi, u) = to_chart(lambda);
    if !(u.norm() < data.circle_radius(node)) {
        return Err(FieldError::OutOfDomain);
    }
    let m = data.n_boundary();
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let zeta = data.boundary_lambda(node, hemi, j);
        let h = data.values[data.slot(node, hemi, j)];
        // dζ = iζ dα along each counter-clockwise circle; on T⁻ the samples
        // run clockwise, which the sign of the second formula absorbs.
        s += match hemi {
            Hemisphere::Plus => h * zeta / (zeta - lambda),
            Hemisphere::Minus => -h * lambda / (zeta - lambda),
        };
    }
    Ok(s / m as f64)
}

/// `T_b`: the Cauchy transform at a boundary point, approached from inside.
pub fn t_b(data: &ScatteringData, lambda: Complex64, p: Vec3) -> Result<Complex64, FieldError> {
    let node = node_of(&data.momentum, p)?;
    let (hemi, u) = to_chart(lambda);
    let r = data.circle_radius(node);
    if (u.norm() - r).abs() > 1e-9 * r {
        return Err(FieldError::OutOfDomain);
    }
    Ok(eval_modes(&circle_modes(data.circle(node, hemi)), u * (1.0 - T_B_OFFSET) / r))
}

/// `max (1+|p|)^μ₀ |T_b H|` over all boundary samples.
pub fn t_b_norm(data: &ScatteringData, mu0: f64) -> Result<f64, FieldError> {
    if data.values.is_empty() {
        return Err(FieldError::EmptyField);
    }
    let bt = BoundaryTransform::new(data);
    let m = data.n_boundary();
    let best = (0..data.momentum.len())
        .into_par_iter()
        .map(|node| {
            let w = (1.0 + data.momentum.nodes[node].p.norm()).powf(mu0);
            let mut best = 0.0f64;
            for hemi in Hemisphere::BOTH {
                let c = bt.modes(node, hemi);
                for j in 0..m {
                    let z = Complex64::from_polar(1.0 - T_B_OFFSET, data.chart_angle(j));
                    best = best.max(w * eval_modes(c, z).norm());
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// `H⁰` at every ring node. The outer ring takes the boundary limit.
pub fn h0_field(data: &ScatteringData, lambda: &LambdaGrid) -> AmplitudeField {
    let bt = BoundaryTransform::new(data);
    let rho = data.params.rho;
    AmplitudeField::from_fn(&data.params, data.momentum.clone(), lambda.clone(), |node, hemi, a, b, _| {
        let pn = data.momentum.nodes[node].p.norm();
        let u = Complex64::from_polar(LambdaGrid::chart_radius(rho, pn, lambda.levels[a]), lambda.angle(b));
        let z = u / bt.radius(node);
        let z = if a + 1 == lambda.n_rings() { z * (1.0 - T_B_OFFSET) } else { z };
        eval_modes(bt.modes(node, hemi), z)
    })
}

/// Cells of the area rule over one momentum: centres in the chart and areas.
pub(super) struct Cells {
    pub(super) centers: Vec<Complex64>,
    areas: Vec<f64>,
    n_angles: usize,
}

impl Cells {
    pub(super) fn new(grid: &LambdaGrid, rho: f64, p_norm: f64) -> Self {
        let nr = grid.n_rings();
        let na = grid.n_angles;
        let da = grid.angle_step();
        let radii: Vec<f64> = grid
            .levels
            .iter()
            .map(|&t| LambdaGrid::chart_radius(rho, p_norm, t))
            .collect();
        let mut centers = Vec::with_capacity((nr - 1) * na);
        let mut areas = Vec::with_capacity(nr - 1);
        for a in 0..nr - 1 {
            let um = LambdaGrid::chart_radius(rho, p_norm, grid.mid_level(a));
            areas.push(0.5 * (radii[a + 1] * radii[a + 1] - radii[a] * radii[a]) * da);
            for b in 0..na {
                centers.push(Complex64::from_polar(um, (b as f64 + 0.5) * da));
            }
        }
        Self {
            centers,
            areas,
            n_angles: na,
        }
    }

    fn len(&self) -> usize {
        self.centers.len()
    }

    /// `−(1/π) Σ G_c A_c / (ω_c − u)`.
    pub(super) fn transform(&self, g: &[Complex64], u: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (c, (&w, &gv)) in self.centers.iter().zip(g).enumerate() {
            s += gv * self.areas[c / self.n_angles] / (w - u);
        }
        -s / PI
    }
}

/// Chart form of a `∂̄`-right-hand side `g(λ)` at chart point `w`.
pub(super) fn chart_rhs(hemi: Hemisphere, w: Complex64, g: Complex64) -> Complex64 {
    match hemi {
        Hemisphere::Plus => g,
        Hemisphere::Minus => -g / (w.conj() * w.conj()),
    }
}

/// `−(1/π)∬_{D^±} g(ζ) K(ζ, λ) dA` for a right-hand side `g`, with the
/// Cauchy kernel of the hemisphere containing `λ`.
pub fn cauchy_area(
    grid: &LambdaGrid,
    rho: f64,
    p_norm: f64,
    rhs: impl Fn(Complex64) -> Complex64,
    lambda: Complex64,
) -> Complex64 {
    let (hemi, u) = to_chart(lambda);
    let cells = Cells::new(grid, rho, p_norm);
    let g: Vec<Complex64> = cells
        .centers
        .iter()
        .map(|&w| chart_rhs(hemi, w, rhs(from_chart(hemi, w))))
        .collect();
    cells.transform(&g, u)
}

/// Result of an area transform over the whole field.
#[derive(Clone, Debug)]
pub struct AreaOutput {
    pub field: AmplitudeField,
    /// Bracket nodes dropped because an evaluation point left the domain.
    pub skipped: usize,
    pub evaluated: usize,
}

/// Chart right-hand side `G` of `(U₁, U₂)` at the cell centres of one
/// momentum, layout `[hemisphere][cell]`.
pub fn area_source<A: AmplitudeSource + ?Sized, B: AmplitudeSource + ?Sized>(
    u1: &A,
    u2: &B,
    params: &RegionParams,
    frame: &Frame,
    grid: &LambdaGrid,
    n_phi: usize,
) -> Result<(Vec<Complex64>, usize, usize), FieldError> {
    let cells = Cells::new(grid, params.rho, frame.p_norm);
    let mut out = Vec::with_capacity(2 * cells.len());
    let (mut skipped, mut evaluated) = (0, 0);
    for hemi in Hemisphere::BOTH {
        for &w in &cells.centers {
            let b = bracket(u1, u2, from_chart(hemi, w), frame, params.ball_radius(), n_phi)?;
            skipped += b.skipped;
            evaluated += b.evaluated;
            out.push(chart_rhs(hemi, w, b.value));
        }
    }
    Ok((out, skipped, evaluated))
}

/// `I(U₁, U₂)`: the area transform of `(U₁, U₂)` at every ring node.
pub fn apply_i(u1: &AmplitudeField, u2: &AmplitudeField, n_phi: usize) -> Result<AreaOutput, FieldError> {
    if !u1.same_grid(u2) {
        return Err(FieldError::Shape {
            expected: u1.len(),
            found: u2.len(),
        });
    }
    let params = u1.params;
    let grid = &u1.lambda;
    let mom = &u1.momentum;
    let blocks: Vec<(Vec<Complex64>, usize, usize)> = (0..mom.len())
        .into_par_iter()
        .map(|node| {
            let frame = &mom.nodes[node].frame;
            let cells = Cells::new(grid, params.rho, frame.p_norm);
            let (g, skipped, evaluated) = area_source(u1, u2, &params, frame, grid, n_phi)?;
            let mut vals = vec![Complex64::new(0.0, 0.0); grid.nodes_per_momentum()];
            for hemi in Hemisphere::BOTH {
                let gh = &g[hemi.index() * cells.len()..(hemi.index() + 1) * cells.len()];
                for a in 0..grid.n_rings() {
                    let r = LambdaGrid::chart_radius(params.rho, frame.p_norm, grid.levels[a]);
                    for b in 0..grid.n_angles {
                        let u = Complex64::from_polar(r, grid.angle(b));
                        vals[grid.local_index(hemi, a, b)] = cells.transform(gh, u);
                    }
                }
            }
            Ok((vals, skipped, evaluated))
        })
        .collect::<Result<_, FieldError>>()?;
    let mut values = Vec::with_capacity(u1.len());
    let (mut skipped, mut evaluated) = (0, 0);
    for (v, s, e) in blocks {
        values.extend(v);
        skipped += s;
        evaluated += e;
    }
    Ok(AreaOutput {
        field: u1.with_values(values)?,
        skipped,
        evaluated,
    })
}

/// `M(U) = I(U, U)`.
pub fn apply_m(u: &AmplitudeField, n_phi: usize) -> Result<AreaOutput, FieldError> {
    apply_i(u, u, n_phi)
}

/// `−(1/π)∬_{|u|<R₊} G(u)/u dA` over one momentum node: the area part of
/// the `λ → 0` (or `λ → ∞`) limit. Polar Gauss–Legendre in `|u|` times the
/// trapezoid rule in `arg u`; returns the value and the skipped count.
pub fn vhat_area_term(
    field: &AmplitudeField,
    node: usize,
    hemi: Hemisphere,
    n_phi: usize,
    n_radial: usize,
    n_angular: usize,
) -> Result<(Complex64, usize), FieldError> {
    let params = &field.params;
    let frame = &field.momentum.nodes[node].frame;
    let r_max = LambdaGrid::chart_radius(params.rho, frame.p_norm, 1.0);
    let rule = gauss_legendre(n_radial);
    let da = 2.0 * PI / n_angular as f64;
    let mut s = Complex64::new(0.0, 0.0);
    let mut skipped = 0;
    for (r, wr) in rule.mapped(0.0, r_max) {
        for j in 0..n_angular {
            let al = (j as f64 + 0.5) * da;
            let w = Complex64::from_polar(r, al);
            let b = bracket(field, field, from_chart(hemi, w), frame, params.ball_radius(), n_phi)?;
            skipped += b.skipped;
            s += wr * da * chart_rhs(hemi, w, b.value) * Complex64::from_polar(1.0, -al);
        }
    }
    Ok((-s / PI, skipped))
}
