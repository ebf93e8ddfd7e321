//! Discretisation grids shared by the forward sampler, the field solver and
//! the Fourier inversion.
//!
//! Momenta live on spherical shells inside the ball `|p| < 2τρ`. The shell
//! radii are the positive half of `2·n_shells` first-kind Chebyshev points
//! on `(−2τρ, 2τρ)`, the polar axis is `ν` with Gauss–Legendre nodes in
//! `cos ϑ`, and the azimuth is uniform with an even count. The angular grid
//! is therefore symmetric under `n̂ ↦ −n̂`, which lets radial interpolation
//! and quadrature run across the origin along full diameters.
//!
//! In λ every momentum gets the same ring structure, indexed by the level
//! `t = ρ/|Im k| ∈ [t_min, 1]`; `t = 1` is the boundary circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    from_chart, level_radius, Frame, GeometryError, Hemisphere, RegionParams, Vec3,
};
use crate::quadrature::{chebyshev_barycentric_weights, chebyshev_fejer, gauss_legendre};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid specification: {0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Resolution of every grid in a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Momentum shells in `(0, 2τρ)`.
    pub n_shells: usize,
    /// Polar nodes about `ν` (Gauss–Legendre in `cos ϑ`).
    pub n_polar: usize,
    /// Azimuthal nodes (even).
    pub n_azimuth: usize,
    /// Samples per boundary circle and hemisphere.
    pub n_boundary: usize,
    /// λ-rings per hemisphere including the boundary ring.
    pub n_rings: usize,
    /// Angular nodes per λ-ring (even).
    pub n_ring_angles: usize,
    /// Innermost level `t = ρ/|Im k|`.
    pub t_min: f64,
    /// Nodes of the shift-angle quadrature in the bracket.
    pub n_phi: usize,
    /// Radial Gauss nodes of the area integral in the reconstruction formula.
    pub n_area_radial: usize,
    /// Angular nodes of the same area integral.
    pub n_area_angular: usize,
    /// Points per axis of the spatial grid.
    pub spatial_n: usize,
    /// Half-width of the spatial box `[−L, L]³`.
    pub spatial_half_width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_shells: 16,
            n_polar: 12,
            n_azimuth: 24,
            n_boundary: 64,
            n_rings: 8,
            n_ring_angles: 16,
            t_min: 1e-3,
            n_phi: 32,
            n_area_radial: 12,
            n_area_angular: 16,
            spatial_n: 32,
            spatial_half_width: 3.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        let bad = |m: &str| Err(GridError::Invalid(m.to_string()));
        if self.n_shells < 2 {
            return bad("n_shells must be at least 2");
        }
        if self.n_polar < 2 {
            return bad("n_polar must be at least 2");
        }
        if self.n_azimuth < 2 || self.n_azimuth % 2 != 0 {
            return bad("n_azimuth must be even and at least 2");
        }
        if self.n_boundary < 4 || self.n_boundary % 2 != 0 {
            return bad("n_boundary must be even and at least 4");
        }
        if self.n_rings < 2 {
            return bad("n_rings must be at least 2");
        }
        if self.n_ring_angles < 4 || self.n_ring_angles % 2 != 0 {
            return bad("n_ring_angles must be even and at least 4");
        }
        if !(self.t_min > 0.0 && self.t_min < 1.0) {
            return bad("t_min must lie in (0, 1)");
        }
        if self.n_phi < 8 || self.n_phi % 2 != 0 {
            return bad("n_phi must be even and at least 8");
        }
        if self.n_area_radial < 2 || self.n_area_angular < 4 {
            return bad("area quadrature needs at least 2 radial and 4 angular nodes");
        }
        if self.spatial_n < 1 || !(self.spatial_half_width > 0.0) {
            return bad("spatial grid must be non-empty with a positive half-width");
        }
        Ok(())
    }

    /// Every resolution parameter doubled (spatial grid untouched).
    pub fn refined(&self) -> Self {
        Self {
            n_shells: 2 * self.n_shells,
            n_polar: 2 * self.n_polar,
            n_azimuth: 2 * self.n_azimuth,
            n_boundary: 2 * self.n_boundary,
            n_rings: 2 * self.n_rings - 1,
            n_ring_angles: 2 * self.n_ring_angles,
            t_min: self.t_min,
            n_phi: 2 * self.n_phi,
            n_area_radial: 2 * self.n_area_radial,
            n_area_angular: 2 * self.n_area_angular,
            spatial_n: self.spatial_n,
            spatial_half_width: self.spatial_half_width,
        }
    }
}

/// One momentum node.
#[derive(Clone, Copy, Debug)]
pub struct MomentumNode {
    pub p: Vec3,
    pub shell: usize,
    pub polar: usize,
    pub azimuth: usize,
    pub frame: Frame,
    /// Weight of this node in `∫_{|p|<2τρ} f(p) dp`.
    pub weight: f64,
}

/// Spherical momentum grid inside the ball of radius `2τρ`.
#[derive(Clone, Debug)]
pub struct MomentumGrid {
    pub radius: f64,
    pub nu: Vec3,
    pub e_a: Vec3,
    pub e_b: Vec3,
    /// Shell radii, ascending.
    pub shells: Vec<f64>,
    /// Polar angles about `ν`, ascending.
    pub polar: Vec<f64>,
    pub n_azimuth: usize,
    /// All `2·n_shells` Chebyshev abscissae on `(−R, R)`, descending.
    pub line_nodes: Vec<f64>,
    pub line_bary: Vec<f64>,
    pub nodes: Vec<MomentumNode>,
}

impl MomentumGrid {
    pub fn new(params: &RegionParams, spec: &GridSpec) -> Result<Self, GridError> {
        params.validate()?;
        spec.validate()?;
        let radius = params.ball_radius();
        let nu = params.nu;
        let helper = if nu.x.abs() < 0.9 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            Vec3::new(0.0, 1.0, 0.0)
        };
        let e_a = nu.cross(helper).unit().expect("nonzero helper cross product");
        let e_b = nu.cross(e_a);

        let nl = 2 * spec.n_shells;
        let line = chebyshev_fejer(nl);
        let line_nodes: Vec<f64> = line.nodes.iter().map(|x| x * radius).collect();
        let line_bary = chebyshev_barycentric_weights(nl);
        // Positive half, ascending radius: line index nl/2-1 down to 0.
        let shells: Vec<f64> = (0..spec.n_shells)
            .map(|i| line_nodes[spec.n_shells - 1 - i])
            .collect();
        let radial_w: Vec<f64> = (0..spec.n_shells)
            .map(|i| {
                let j = spec.n_shells - 1 - i;
                line.weights[j] * radius * shells[i] * shells[i]
            })
            .collect();

        let gl = gauss_legendre(spec.n_polar);
        let polar: Vec<f64> = (0..spec.n_polar)
            .map(|j| gl.nodes[spec.n_polar - 1 - j].acos())
            .collect();
        let polar_w: Vec<f64> = (0..spec.n_polar).map(|j| gl.weights[spec.n_polar - 1 - j]).collect();
        let az_w = 2.0 * PI / spec.n_azimuth as f64;

        let sin_cone = params.cone_half_angle.sin();
        if polar.iter().any(|t| t.sin() <= sin_cone) {
            return Err(GridError::Invalid(
                "a polar node falls inside the excluded cone; reduce n_polar or the cone angle".into(),
            ));
        }

        let mut nodes = Vec::with_capacity(spec.n_shells * spec.n_polar * spec.n_azimuth);
        for (i, &r) in shells.iter().enumerate() {
            for (j, &th) in polar.iter().enumerate() {
                for m in 0..spec.n_azimuth {
                    let az = az_w * m as f64;
                    let dir = direction(e_a, e_b, nu, th, az);
                    let p = dir * r;
                    let frame = params.frame(p)?;
                    nodes.push(MomentumNode {
                        p,
                        shell: i,
                        polar: j,
                        azimuth: m,
                        frame,
                        weight: radial_w[i] * polar_w[j] * az_w,
                    });
                }
            }
        }
        Ok(Self {
            radius,
            nu,
            e_a,
            e_b,
            shells,
            polar,
            n_azimuth: spec.n_azimuth,
            line_nodes,
            line_bary,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_shells(&self) -> usize {
        self.shells.len()
    }

    pub fn n_polar(&self) -> usize {
        self.polar.len()
    }

    pub fn index(&self, shell: usize, polar: usize, azimuth: usize) -> usize {
        (shell * self.polar.len() + polar) * self.n_azimuth + azimuth
    }

    /// Spherical coordinates `(r, ϑ, φ)` of `p` about `ν`, with `φ ∈ [0, 2π)`.
    pub fn spherical(&self, p: Vec3) -> (f64, f64, f64) {
        let r = p.norm();
        if r == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let c = (p.dot(self.nu) / r).clamp(-1.0, 1.0);
        let th = c.acos();
        let mut az = p.dot(self.e_b).atan2(p.dot(self.e_a));
        if az < 0.0 {
            az += 2.0 * PI;
        }
        (r, th, az)
    }

    /// Finds the node at `p` (to a relative tolerance), if any.
    pub fn find(&self, p: Vec3) -> Option<usize> {
        let (r, th, az) = self.spherical(p);
        let i = nearest(&self.shells, r)?;
        let j = nearest(&self.polar, th)?;
        let m = ((az / (2.0 * PI) * self.n_azimuth as f64).round() as usize) % self.n_azimuth;
        let idx = self.index(i, j, m);
        let q = self.nodes[idx].p;
        ((q - p).norm() <= 1e-9 * (1.0 + r)).then_some(idx)
    }

    /// Index of the antipodal node.
    pub fn antipode(&self, idx: usize) -> usize {
        let n = &self.nodes[idx];
        self.index(
            n.shell,
            self.polar.len() - 1 - n.polar,
            (n.azimuth + self.n_azimuth / 2) % self.n_azimuth,
        )
    }
}

fn nearest(xs: &[f64], x: f64) -> Option<usize> {
    xs.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map(|(i, _)| i)
}

pub fn direction(e_a: Vec3, e_b: Vec3, nu: Vec3, theta: f64, az: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sa, ca) = az.sin_cos();
    e_a * (st * ca) + e_b * (st * sa) + nu * ct
}

/// Levels `t = ρ/|Im k|` and angles of the λ-rings, identical for all momenta.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaGrid {
    /// Ring levels, ascending; the last one is 1 (boundary circle).
    pub levels: Vec<f64>,
    pub n_angles: usize,
    pub t_min: f64,
}

impl LambdaGrid {
    pub fn new(spec: &GridSpec) -> Self {
        let n = spec.n_rings;
        let lt = spec.t_min.ln();
        let levels = (0..n)
            .map(|a| {
                if a + 1 == n {
                    1.0
                } else {
                    (lt * (1.0 - a as f64 / (n - 1) as f64)).exp()
                }
            })
            .collect();
        Self {
            levels,
            n_angles: spec.n_ring_angles,
            t_min: spec.t_min,
        }
    }

    pub fn n_rings(&self) -> usize {
        self.levels.len()
    }

    /// Nodes per momentum (both hemispheres).
    pub fn nodes_per_momentum(&self) -> usize {
        2 * self.levels.len() * self.n_angles
    }

    pub fn angle(&self, b: usize) -> f64 {
        2.0 * PI * b as f64 / self.n_angles as f64
    }

    pub fn angle_step(&self) -> f64 {
        2.0 * PI / self.n_angles as f64
    }

    /// Offset of node `(hemi, ring, angle)` within one momentum's block.
    pub fn local_index(&self, hemi: Hemisphere, ring: usize, angle: usize) -> usize {
        (hemi.index() * self.levels.len() + ring) * self.n_angles + angle
    }

    /// Level of the cell between rings `a` and `a+1` (geometric mean).
    pub fn mid_level(&self, a: usize) -> f64 {
        (self.levels[a] * self.levels[a + 1]).sqrt()
    }

    /// Chart radius of level `t` over a momentum of norm `p_norm`.
    pub fn chart_radius(rho: f64, p_norm: f64, t: f64) -> f64 {
        level_radius(rho / (t * p_norm))
    }

    /// λ of the ring node `(hemi, ring, angle)` over `p_norm`.
    pub fn node_lambda(
        &self,
        rho: f64,
        p_norm: f64,
        hemi: Hemisphere,
        ring: usize,
        angle: usize,
    ) -> Complex64 {
        let u = Self::chart_radius(rho, p_norm, self.levels[ring]);
        from_chart(hemi, Complex64::from_polar(u, self.angle(angle)))
    }
}

/// Uniform cubic grid `[−L, L]³` with `n` points per axis, endpoints
/// included; the origin is a node when `n` is odd.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialGrid {
    pub n: usize,
    pub half_width: f64,
    pub points: Vec<Vec3>,
}

impl SpatialGrid {
    pub fn new(n: usize, half_width: f64) -> Self {
        let coord = |i: usize| {
            if n == 1 {
                0.0
            } else {
                -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64
            }
        };
        let mut points = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    points.push(Vec3::new(coord(i), coord(j), coord(k)));
                }
            }
        }
        Self {
            n,
            half_width,
            points,
        }
    }

    pub fn from_spec(spec: &GridSpec) -> Self {
        Self::new(spec.spatial_n, spec.spatial_half_width)
    }

    pub fn from_points(points: Vec<Vec3>) -> Self {
        Self {
            n: 0,
            half_width: 0.0,
            points,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{in_region, Region};

    fn small() -> GridSpec {
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
    fn momentum_nodes_inside_ball_and_outside_cone() {
        let params = RegionParams::new(20.0, 0.1).unwrap();
        let g = MomentumGrid::new(&params, &small()).unwrap();
        assert_eq!(g.len(), 6 * 4 * 8);
        for n in &g.nodes {
            let r = n.p.norm();
            assert!(r > 0.0 && r < params.ball_radius());
            assert!(!params.in_cone(n.p));
        }
    }

    #[test]
    fn antipodes_and_lookup() {
        let params = RegionParams::new(20.0, 0.1).unwrap();
        let g = MomentumGrid::new(&params, &small()).unwrap();
        for idx in 0..g.len() {
            let a = g.antipode(idx);
            assert!((g.nodes[a].p + g.nodes[idx].p).norm() < 1e-13);
            assert_eq!(g.find(g.nodes[idx].p), Some(idx));
        }
        assert_eq!(g.find(Vec3::new(0.123, 0.3, 0.01)), None);
    }

    #[test]
    fn ball_quadrature_of_gaussian() {
        let params = RegionParams::new(40.0, 0.1).unwrap();
        // ∫ e^{-|p|²/2} over R³ = (2π)^{3/2}; the ball of radius 8 holds all of it.
        for (n_shells, tol) in [(16, 1e-5), (32, 1e-11)] {
            let spec = GridSpec {
                n_shells,
                ..small()
            };
            let g = MomentumGrid::new(&params, &spec).unwrap();
            let q: f64 = g.nodes.iter().map(|n| n.weight * (-0.5 * n.p.norm2()).exp()).sum();
            assert!((q / (2.0 * PI).powf(1.5) - 1.0).abs() < tol, "{q}");
        }
    }

    #[test]
    fn ring_nodes_lie_in_their_domains() {
        let params = RegionParams::new(20.0, 0.1).unwrap();
        let spec = small();
        let lg = LambdaGrid::new(&spec);
        let g = MomentumGrid::new(&params, &spec).unwrap();
        for n in g.nodes.iter().step_by(7) {
            let pn = n.p.norm();
            for hemi in Hemisphere::BOTH {
                for a in 0..lg.n_rings() {
                    for b in 0..lg.n_angles {
                        let lam = lg.node_lambda(params.rho, pn, hemi, a, b);
                        let region = match (hemi, a + 1 == lg.n_rings()) {
                            (Hemisphere::Plus, false) => Region::DPlus,
                            (Hemisphere::Minus, false) => Region::DMinus,
                            (Hemisphere::Plus, true) => Region::TPlus,
                            (Hemisphere::Minus, true) => Region::TMinus,
                        };
                        assert!(in_region(lam, n.p, &params, region).unwrap());
                    }
                }
            }
        }
    }
}
