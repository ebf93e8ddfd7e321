//! Field storage on the momentum grid × λ-rings, and its interpolation.
//!
//! Interpolation splits a field into a per-momentum mean `Ū(p)` (the
//! average over all λ-nodes at that momentum) and the remainder. The mean
//! carries almost all of the momentum dependence, so it gets the accurate
//! treatment: barycentric interpolation along the full Chebyshev diameter
//! through the origin, linear in the two angles. The remainder is
//! interpolated multilinearly in radius, polar angle, azimuth, `log t` and
//! the ring angle. Both parts reproduce node values exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use super::FieldError;
use crate::geometry::{to_chart, Frame, Hemisphere, RegionParams, Vec3};
use crate::grid::{GridSpec, LambdaGrid, MomentumGrid};
use crate::quadrature::barycentric_coefficients;

/// Complex field `U(λ, p)` sampled on every ring node of every momentum.
#[derive(Clone, Debug)]
pub struct AmplitudeField {
    pub params: RegionParams,
    pub momentum: Arc<MomentumGrid>,
    pub lambda: LambdaGrid,
    /// Layout `[node][hemisphere][ring][angle]`.
    values: Vec<Complex64>,
    means: Vec<Complex64>,
}

/// Angular interpolation stencil on the momentum sphere: four `(polar,
/// azimuth)` node pairs with weights.
#[derive(Clone, Copy, Debug)]
struct AngularStencil {
    corners: [(usize, usize, f64); 4],
}

impl AngularStencil {
    fn mirrored(&self, n_polar: usize, n_az: usize) -> Self {
        let mut c = self.corners;
        for e in c.iter_mut() {
            *e = (n_polar - 1 - e.0, (e.1 + n_az / 2) % n_az, e.2);
        }
        Self { corners: c }
    }
}

impl AmplitudeField {
    pub fn zeros(params: &RegionParams, momentum: Arc<MomentumGrid>, lambda: LambdaGrid) -> Self {
        let n = momentum.len() * lambda.nodes_per_momentum();
        let m = momentum.len();
        Self {
            params: *params,
            momentum,
            lambda,
            values: vec![Complex64::new(0.0, 0.0); n],
            means: vec![Complex64::new(0.0, 0.0); m],
        }
    }

    pub fn from_spec(params: &RegionParams, spec: &GridSpec) -> Result<Self, FieldError> {
        let momentum = Arc::new(MomentumGrid::new(params, spec)?);
        Ok(Self::zeros(params, momentum, LambdaGrid::new(spec)))
    }

    /// Field with `values` in the documented layout.
    pub fn from_values(
        params: &RegionParams,
        momentum: Arc<MomentumGrid>,
        lambda: LambdaGrid,
        values: Vec<Complex64>,
    ) -> Result<Self, FieldError> {
        let mut f = Self::zeros(params, momentum, lambda);
        if values.len() != f.values.len() {
            return Err(FieldError::Shape {
                expected: f.values.len(),
                found: values.len(),
            });
        }
        f.values = values;
        f.refresh_means();
        Ok(f)
    }

    /// Field built node by node from `f(node, hemi, ring, angle, λ)`.
    pub fn from_fn(
        params: &RegionParams,
        momentum: Arc<MomentumGrid>,
        lambda: LambdaGrid,
        mut f: impl FnMut(usize, Hemisphere, usize, usize, Complex64) -> Complex64,
    ) -> Self {
        let mut out = Self::zeros(params, momentum, lambda);
        let per = out.lambda.nodes_per_momentum();
        for node in 0..out.momentum.len() {
            let pn = out.momentum.nodes[node].p.norm();
            for hemi in Hemisphere::BOTH {
                for a in 0..out.lambda.n_rings() {
                    for b in 0..out.lambda.n_angles {
                        let lam = out.lambda.node_lambda(out.params.rho, pn, hemi, a, b);
                        let s = node * per + out.lambda.local_index(hemi, a, b);
                        out.values[s] = f(node, hemi, a, b, lam);
                    }
                }
            }
        }
        out.refresh_means();
        out
    }

    /// A field on the same grids with new values.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self, FieldError> {
        Self::from_values(&self.params, self.momentum.clone(), self.lambda.clone(), values)
    }

    fn refresh_means(&mut self) {
        let per = self.lambda.nodes_per_momentum();
        self.means = self
            .values
            .chunks(per)
            .map(|c| c.iter().sum::<Complex64>() / per as f64)
            .collect();
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, node: usize) -> &[Complex64] {
        let per = self.lambda.nodes_per_momentum();
        &self.values[node * per..(node + 1) * per]
    }

    pub fn index(&self, node: usize, hemi: Hemisphere, ring: usize, angle: usize) -> usize {
        node * self.lambda.nodes_per_momentum() + self.lambda.local_index(hemi, ring, angle)
    }

    pub fn value(&self, node: usize, hemi: Hemisphere, ring: usize, angle: usize) -> Complex64 {
        self.values[self.index(node, hemi, ring, angle)]
    }

    pub fn node_lambda(&self, node: usize, hemi: Hemisphere, ring: usize, angle: usize) -> Complex64 {
        let pn = self.momentum.nodes[node].p.norm();
        self.lambda.node_lambda(self.params.rho, pn, hemi, ring, angle)
    }

    /// Mean over all λ-nodes at one momentum.
    pub fn mean(&self, node: usize) -> Complex64 {
        self.means[node]
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.momentum, &other.momentum) || self.momentum.nodes.len() == other.momentum.nodes.len()
            && self.lambda == other.lambda
            && self.params == other.params
    }

    /// `α·self + β·other`, node by node.
    pub fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        self.with_values(values).expect("same shape")
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        self.with_values(self.values.iter().map(|v| alpha * v).collect())
            .expect("same shape")
    }

    /// `max (1+|p|)^μ₀ |U|` over all nodes.
    pub fn norm(&self, mu0: f64) -> Result<f64, FieldError> {
        if self.values.is_empty() {
            return Err(FieldError::EmptyField);
        }
        let per = self.lambda.nodes_per_momentum();
        Ok(self
            .values
            .chunks(per)
            .enumerate()
            .map(|(node, c)| {
                let w = (1.0 + self.momentum.nodes[node].p.norm()).powf(mu0);
                w * c.iter().map(|v| v.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max))
    }

    /// Value at `(λ, p)` by interpolation.
    pub fn interpolate(&self, lambda: Complex64, p: Vec3) -> Result<Complex64, FieldError> {
        self.interpolate_norm(lambda, p, p.norm())
    }

    /// Same as [`interpolate`](Self::interpolate) with a frame supplying `|p|`.
    pub fn eval_in_frame(&self, lambda: Complex64, frame: &Frame) -> Result<Complex64, FieldError> {
        self.interpolate_norm(lambda, frame.p, frame.p_norm)
    }

    fn interpolate_norm(&self, lambda: Complex64, p: Vec3, pn: f64) -> Result<Complex64, FieldError> {
        let g = &*self.momentum;
        if !(pn > 0.0) || pn >= g.radius || self.params.in_cone(p) {
            return Err(FieldError::OutOfDomain);
        }
        let (hemi, u) = to_chart(lambda);
        let un = u.norm();
        if !(un > 0.0) {
            return Err(FieldError::OutOfDomain);
        }
        let im_k = 0.25 * pn * (un + 1.0 / un);
        let t = self.params.rho / im_k;
        if t > 1.0 + 1e-9 {
            return Err(FieldError::OutOfDomain);
        }

        // λ stencil.
        let nr = self.lambda.n_rings();
        let lt = self.lambda.t_min.ln();
        let apos = ((nr - 1) as f64 * (1.0 - t.clamp(self.lambda.t_min, 1.0).ln() / lt)).clamp(0.0, (nr - 1) as f64);
        let a0 = (apos.floor() as usize).min(nr - 2);
        let fa = apos - a0 as f64;
        let na = self.lambda.n_angles;
        let mut ang = u.arg();
        if ang < 0.0 {
            ang += 2.0 * PI;
        }
        let bpos = ang / self.lambda.angle_step();
        let b0f = bpos.floor();
        let fb = bpos - b0f;
        let b0 = (b0f as usize) % na;
        let b1 = (b0 + 1) % na;
        let lam_st = [
            (a0, b0, (1.0 - fa) * (1.0 - fb)),
            (a0, b1, (1.0 - fa) * fb),
            (a0 + 1, b0, fa * (1.0 - fb)),
            (a0 + 1, b1, fa * fb),
        ];

        let (r, th, az) = g.spherical(p);
        let ang_st = self.angular_stencil(th, az);
        let ang_mirror = ang_st.mirrored(g.n_polar(), g.n_azimuth);

        // Mean part along the diameter.
        let ns = g.n_shells();
        let nl = 2 * ns;
        let mut coef = [0.0f64; 256];
        let coef = if nl <= 256 {
            &mut coef[..nl]
        } else {
            return Err(FieldError::Unsupported("more than 128 shells".into()));
        };
        barycentric_coefficients(&g.line_nodes, &g.line_bary, r, coef);
        let mut mean = Complex64::new(0.0, 0.0);
        for (l, &c) in coef.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let (shell, st) = if l < ns {
                (ns - 1 - l, &ang_st)
            } else {
                (l - ns, &ang_mirror)
            };
            let mut s = Complex64::new(0.0, 0.0);
            for &(j, m, w) in &st.corners {
                if w != 0.0 {
                    s += w * self.means[g.index(shell, j, m)];
                }
            }
            mean += c * s;
        }

        // Remainder: linear in radius, constant beyond the first and last shells.
        let (i0, i1, fr) = if r <= g.shells[0] {
            (0, 0, 0.0)
        } else if r >= g.shells[ns - 1] {
            (ns - 1, ns - 1, 0.0)
        } else {
            let i = g.shells.partition_point(|&s| s <= r) - 1;
            (i, i + 1, (r - g.shells[i]) / (g.shells[i + 1] - g.shells[i]))
        };
        let mut fluct = Complex64::new(0.0, 0.0);
        for (shell, wr) in [(i0, 1.0 - fr), (i1, fr)] {
            if wr == 0.0 {
                continue;
            }
            for &(j, m, w) in &ang_st.corners {
                if w == 0.0 {
                    continue;
                }
                let node = g.index(shell, j, m);
                let mu = self.means[node];
                let mut s = Complex64::new(0.0, 0.0);
                for &(ra, rb, wl) in &lam_st {
                    if wl != 0.0 {
                        s += wl * (self.values[self.index(node, hemi, ra, rb)] - mu);
                    }
                }
                fluct += wr * w * s;
            }
        }
        Ok(mean + fluct)
    }

    fn angular_stencil(&self, th: f64, az: f64) -> AngularStencil {
        let g = &*self.momentum;
        let np = g.n_polar();
        let naz = g.n_azimuth;
        let half = naz / 2;
        let apos = az / (2.0 * PI / naz as f64);
        let m0f = apos.floor();
        let fm = apos - m0f;
        let m0 = (m0f as usize) % naz;
        let m1 = (m0 + 1) % naz;
        // Polar neighbours, reflecting through the poles.
        let (jl, sl, jh, sh, ft) = if th < g.polar[0] {
            let t0 = g.polar[0];
            (0, half, 0, 0, (th + t0) / (2.0 * t0))
        } else if th >= g.polar[np - 1] {
            let tl = g.polar[np - 1];
            let reflected = 2.0 * PI - tl;
            (np - 1, 0, np - 1, half, (th - tl) / (reflected - tl))
        } else {
            let j = g.polar.partition_point(|&x| x <= th) - 1;
            (j, 0, j + 1, 0, (th - g.polar[j]) / (g.polar[j + 1] - g.polar[j]))
        };
        AngularStencil {
            corners: [
                (jl, (m0 + sl) % naz, (1.0 - ft) * (1.0 - fm)),
                (jl, (m1 + sl) % naz, (1.0 - ft) * fm),
                (jh, (m0 + sh) % naz, ft * (1.0 - fm)),
                (jh, (m1 + sh) % naz, ft * fm),
            ],
        }
    }

    /// Columnar text in the layout of the scattering data with a ring index.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str("# faddeev-amplitude-field 1\n");
        let _ = writeln!(out, "# params {}", serde_json::to_string(&self.params).unwrap());
        let _ = writeln!(
            out,
            "# rings {}",
            serde_json::to_string(&self.lambda.levels).unwrap()
        );
        out.push_str("# columns p_x p_y p_z re_lambda im_lambda hemisphere ring re_U im_U\n");
        for node in 0..self.momentum.len() {
            let p = self.momentum.nodes[node].p;
            for hemi in Hemisphere::BOTH {
                for a in 0..self.lambda.n_rings() {
                    for b in 0..self.lambda.n_angles {
                        let lam = self.node_lambda(node, hemi, a, b);
                        let v = self.value(node, hemi, a, b);
                        let _ = writeln!(
                            out,
                            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {} {} {:.16e} {:.16e}",
                            p.x,
                            p.y,
                            p.z,
                            lam.re,
                            lam.im,
                            hemi.sign(),
                            a,
                            v.re,
                            v.im
                        );
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(spec: &GridSpec) -> (RegionParams, Arc<MomentumGrid>, LambdaGrid) {
        let params = RegionParams::new(20.0, 0.1).unwrap();
        let g = Arc::new(MomentumGrid::new(&params, spec).unwrap());
        (params, g, LambdaGrid::new(spec))
    }

    fn spec() -> GridSpec {
        GridSpec {
            n_shells: 6,
            n_polar: 4,
            n_azimuth: 8,
            n_rings: 5,
            n_ring_angles: 8,
            ..GridSpec::default()
        }
    }

    #[test]
    fn nodes_are_reproduced() {
        let (params, g, lg) = setup(&spec());
        let f = AmplitudeField::from_fn(&params, g.clone(), lg, |node, h, a, b, lam| {
            Complex64::new(node as f64, a as f64 + 0.1 * b as f64) * if h == Hemisphere::Plus { 1.0 } else { -2.0 } + lam
        });
        for node in (0..g.len()).step_by(5) {
            for hemi in Hemisphere::BOTH {
                for a in 0..f.lambda.n_rings() {
                    for b in 0..f.lambda.n_angles {
                        let lam = f.node_lambda(node, hemi, a, b);
                        let v = f.interpolate(lam, g.nodes[node].p).unwrap();
                        let want = f.value(node, hemi, a, b);
                        assert!((v - want).norm() <= 1e-9 * (1.0 + want.norm()), "{v} vs {want}");
                    }
                }
            }
        }
    }

    #[test]
    fn constant_field_is_constant() {
        let (params, g, lg) = setup(&spec());
        let c = Complex64::new(0.3, -1.7);
        let f = AmplitudeField::from_fn(&params, g, lg, |_, _, _, _, _| c);
        for (lam, p) in [
            (Complex64::new(0.001, 0.002), Vec3::new(0.3, 0.2, 0.9)),
            (Complex64::new(-300.0, 20.0), Vec3::new(-1.3, 0.2, -0.9)),
            (Complex64::new(0.0, -0.00005), Vec3::new(0.01, 0.0, 0.02)),
        ] {
            let v = f.interpolate(lam, p).unwrap();
            assert!((v - c).norm() < 1e-13);
        }
    }

    #[test]
    fn outside_domain_is_rejected() {
        let (params, g, lg) = setup(&spec());
        let f = AmplitudeField::zeros(&params, g, lg);
        // |λ| = 0.5 over |p| = 1 lies inside |Im k| < ρ.
        assert!(matches!(
            f.interpolate(Complex64::new(0.5, 0.0), Vec3::new(1.0, 0.0, 0.0)),
            Err(FieldError::OutOfDomain)
        ));
        assert!(matches!(
            f.interpolate(Complex64::new(0.01, 0.0), Vec3::new(5.0, 0.0, 0.0)),
            Err(FieldError::OutOfDomain)
        ));
    }

    #[test]
    fn norm_of_weight_profile() {
        let (params, g, lg) = setup(&spec());
        let mu0 = 2.0;
        let gg = g.clone();
        let f = AmplitudeField::from_fn(&params, g, lg, |node, _, _, _, _| {
            Complex64::new((1.0 + gg.nodes[node].p.norm()).powf(-mu0), 0.0)
        });
        assert!((f.norm(mu0).unwrap() - 1.0).abs() < 1e-14);
        let s = f.scaled(Complex64::new(0.0, -3.0));
        assert!((s.norm(mu0).unwrap() - 3.0).abs() < 1e-14);
    }
}
