//! Extraction of `v̂±` from the boundary data and the completed field,
//! error budgets, spherical Fourier synthesis on the ball, and the linear
//! Born baseline.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cauchy::{vhat_area_term, AmplitudeField, FieldError};
use crate::geometry::{Hemisphere, RegionParams, Vec3};
use crate::grid::MomentumGrid;
use crate::scatter::{PotentialModel, ScatteringData};
use crate::solver::{check_feasibility, ConstantsTable, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum ReconError {
    #[error("field and data live on different momentum grids")]
    GridMismatch,
    #[error("{0} values supplied for a grid of {1} momenta")]
    Length(usize, usize),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Area-integral resolution of the extraction formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtractionRule {
    pub n_phi: usize,
    pub n_radial: usize,
    pub n_angular: usize,
}

/// `v̂⁺` and `v̂⁻` at one momentum node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VhatPair {
    pub plus: Complex64,
    pub minus: Complex64,
    /// Bracket nodes dropped in the two area integrals.
    pub skipped: usize,
}

fn circle_mean(data: &ScatteringData, node: usize, hemi: Hemisphere) -> Complex64 {
    let c = data.circle(node, hemi);
    c.iter().sum::<Complex64>() / c.len() as f64
}

/// `v̂±(p)` at momentum node `node`: the mean of the measured data on `T^±`
/// plus the area integral of the bracket of the completed field.
pub fn vhat_pm(
    field: &AmplitudeField,
    data: &ScatteringData,
    node: usize,
    rule: ExtractionRule,
) -> Result<VhatPair, ReconError> {
    if field.momentum.len() != data.momentum.len() || node >= data.momentum.len() {
        return Err(ReconError::GridMismatch);
    }
    let mut out = [Complex64::new(0.0, 0.0); 2];
    let mut skipped = 0;
    for hemi in Hemisphere::BOTH {
        let (area, s) = vhat_area_term(field, node, hemi, rule.n_phi, rule.n_radial, rule.n_angular)?;
        skipped += s;
        out[hemi.index()] = circle_mean(data, node, hemi) + area;
    }
    Ok(VhatPair {
        plus: out[0],
        minus: out[1],
        skipped,
    })
}

/// [`vhat_pm`] at every momentum node, in node order.
pub fn extract_all(field: &AmplitudeField, data: &ScatteringData, rule: ExtractionRule) -> Result<Vec<VhatPair>, ReconError> {
    if field.momentum.len() != data.momentum.len() {
        return Err(ReconError::GridMismatch);
    }
    (0..data.momentum.len())
        .into_par_iter()
        .map(|node| vhat_pm(field, data, node, rule))
        .collect()
}

/// Theoretical error budget of the reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// `3b₄/((1−2c₈r_min)(1−η)²)`; `None` when the denominators are not positive.
    pub q_factor: Option<f64>,
    /// `3b₄/((1−δ)³(2τ)^{μ−μ₀})`.
    pub c5: f64,
    /// `C²(1+2τρ)^{−(μ−μ₀)}`.
    pub scale: f64,
    pub mu0: f64,
    /// `(|p|, q·scale·(1+|p|)^{−μ₀})` per shell.
    pub profile: Vec<(f64, f64)>,
    pub solver_residual: f64,
    /// Largest forward-quadrature error estimate in the data.
    pub data_quadrature_error: f64,
    /// Fraction of bracket nodes skipped during the solve and extraction.
    pub skipped_fraction: f64,
    /// Whether the constants are placeholders.
    pub advisory: bool,
}

impl ErrorBudget {
    /// Pointwise bound at `|p|`; infinite without a finite `q`.
    pub fn bound_at(&self, p_norm: f64) -> f64 {
        self.q_factor
            .map_or(f64::INFINITY, |q| q * self.scale * (1.0 + p_norm).powf(-self.mu0))
    }
}

/// Inputs of [`error_budget`] that come from a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunNumbers {
    pub solver_residual: f64,
    pub data_quadrature_error: f64,
    pub skipped_fraction: f64,
}

pub fn error_budget(
    params: &RegionParams,
    config: &SolverConfig,
    c: f64,
    constants: &ConstantsTable,
    shells: &[f64],
    run: RunNumbers,
) -> Result<ErrorBudget, ReconError> {
    let rep = check_feasibility(config, c, params.tau, params.rho, constants);
    if rep.enforced && !rep.feasible() && !config.override_feasibility {
        return Err(SolverError::FeasibilityViolated(rep.failures().join(", ")).into());
    }
    let (mu, mu0) = (config.mu, config.mu0);
    let b4 = constants.b4();
    let q_factor = rep.r_min.and_then(|r| {
        let a = 1.0 - 2.0 * rep.c8 * r;
        let e = 1.0 - rep.eta;
        (a > 0.0 && e > 0.0).then(|| 3.0 * b4 / (a * e * e))
    });
    let c5 = 3.0 * b4 / ((1.0 - config.delta).powi(3) * (2.0 * params.tau).powf(mu - mu0));
    let scale = c * c * (1.0 + params.ball_radius()).powf(-(mu - mu0));
    let profile = shells
        .iter()
        .map(|&s| (s, q_factor.map_or(f64::INFINITY, |q| q * scale * (1.0 + s).powf(-mu0))))
        .collect();
    Ok(ErrorBudget {
        q_factor,
        c5,
        scale,
        mu0,
        profile,
        solver_residual: run.solver_residual,
        data_quadrature_error: run.data_quadrature_error,
        skipped_fraction: run.skipped_fraction,
        advisory: constants.placeholder,
    })
}

/// `v(x) = ∫_{|p|<2τρ} e^{−ip·x} v̂(p) dp` with the momentum grid's weights.
pub fn inverse_fourier(vhat: &[Complex64], grid: &MomentumGrid, points: &[Vec3]) -> Result<Vec<Complex64>, ReconError> {
    if vhat.len() != grid.len() {
        return Err(ReconError::Length(vhat.len(), grid.len()));
    }
    Ok(points
        .par_iter()
        .map(|&x| {
            grid.nodes
                .iter()
                .zip(vhat)
                .map(|(n, &v)| n.weight * Complex64::from_polar(1.0, -n.p.dot(x)) * v)
                .sum()
        })
        .collect())
}

/// Linear reconstruction from the exact transform on the same ball, and its
/// error against the closed-form potential.
#[derive(Clone, Debug, PartialEq)]
pub struct BornBaseline {
    pub v_lin: Vec<f64>,
    pub v_err: Vec<f64>,
}

pub fn born_reconstruct(model: &PotentialModel, grid: &MomentumGrid, points: &[Vec3]) -> BornBaseline {
    let vhat: Vec<Complex64> = grid.nodes.iter().map(|n| model.vhat(n.p)).collect();
    let v = inverse_fourier(&vhat, grid, points).expect("lengths match by construction");
    let v_lin: Vec<f64> = v.iter().map(|z| z.re).collect();
    let v_err = points.iter().zip(&v_lin).map(|(&x, &l)| model.v(x) - l).collect();
    BornBaseline { v_lin, v_err }
}

/// `max (1+|p|)^μ₀ |v̂(p) − w(p)|` over the grid nodes.
pub fn compare_norm(
    truth: impl Fn(Vec3) -> Complex64,
    vhat: &[Complex64],
    grid: &MomentumGrid,
    mu0: f64,
) -> Result<f64, ReconError> {
    if vhat.len() != grid.len() {
        return Err(ReconError::Length(vhat.len(), grid.len()));
    }
    Ok(grid
        .nodes
        .iter()
        .zip(vhat)
        .map(|(n, &w)| (1.0 + n.p.norm()).powf(mu0) * (truth(n.p) - w).norm())
        .fold(0.0, f64::max))
}

/// Everything the reconstruction produces.
#[derive(Clone, Debug)]
pub struct ReconstructionResult {
    pub vhat_plus: Vec<Complex64>,
    pub vhat_minus: Vec<Complex64>,
    pub points: Vec<Vec3>,
    pub v_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    /// `max |Im v±(x)|`.
    pub imag_max: f64,
    pub skipped: usize,
    pub budget: ErrorBudget,
}

/// Extraction at every node followed by Fourier synthesis at `points`.
pub fn reconstruct(
    field: &AmplitudeField,
    data: &ScatteringData,
    rule: ExtractionRule,
    points: &[Vec3],
    budget: ErrorBudget,
) -> Result<ReconstructionResult, ReconError> {
    let pairs = extract_all(field, data, rule)?;
    let vhat_plus: Vec<Complex64> = pairs.iter().map(|p| p.plus).collect();
    let vhat_minus: Vec<Complex64> = pairs.iter().map(|p| p.minus).collect();
    let skipped = pairs.iter().map(|p| p.skipped).sum();
    let vp = inverse_fourier(&vhat_plus, &data.momentum, points)?;
    let vm = inverse_fourier(&vhat_minus, &data.momentum, points)?;
    let imag_max = vp.iter().chain(&vm).map(|z| z.im.abs()).fold(0.0, f64::max);
    Ok(ReconstructionResult {
        vhat_plus,
        vhat_minus,
        points: points.to_vec(),
        v_plus: vp.iter().map(|z| z.re).collect(),
        v_minus: vm.iter().map(|z| z.re).collect(),
        imag_max,
        skipped,
        budget,
    })
}

impl ReconstructionResult {
    /// Momentum table; `bound` is the pointwise error bound at `|p|`.
    pub fn momentum_table(&self, grid: &MomentumGrid, bound: impl Fn(f64) -> f64) -> String {
        let mut out = String::from(
            "# faddeev-vhat 1\n# v̂± from the contour mean of H on T± plus the area integral of the completed field\n# columns p_x p_y p_z re_vhat_plus im_vhat_plus re_vhat_minus im_vhat_minus bound\n",
        );
        for ((n, a), b) in grid.nodes.iter().zip(&self.vhat_plus).zip(&self.vhat_minus) {
            let _ = writeln!(
                out,
                "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                n.p.x,
                n.p.y,
                n.p.z,
                a.re,
                a.im,
                b.re,
                b.im,
                bound(n.p.norm())
            );
        }
        out
    }

    /// Spatial table with optional truth and Born columns (`nan` when absent).
    pub fn spatial_table(&self, v_true: Option<&[f64]>, v_born: Option<&[f64]>) -> String {
        let mut out = String::from(
            "# faddeev-potential 1\n# v±(x) by Fourier synthesis of v̂± over the ball |p| < 2τρ\n# columns x y z v_plus v_minus v_true v_born\n",
        );
        for (i, x) in self.points.iter().enumerate() {
            let t = v_true.map_or(f64::NAN, |v| v[i]);
            let b = v_born.map_or(f64::NAN, |v| v[i]);
            let _ = writeln!(
                out,
                "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}",
                x.x, x.y, x.z, self.v_plus[i], self.v_minus[i], t, b
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    fn grid(rho: f64, tau: f64, ns: usize) -> MomentumGrid {
        let spec = GridSpec {
            n_shells: ns,
            n_polar: 8,
            n_azimuth: 16,
            ..GridSpec::default()
        };
        MomentumGrid::new(&RegionParams::new(rho, tau).unwrap(), &spec).unwrap()
    }

    #[test]
    fn gaussian_pair_at_origin() {
        // (2π)^{−3/2} e^{−|p|²/2} ↔ e^{−|x|²/2}; the tail beyond 2τρ = 10 is negligible.
        let g = grid(50.0, 0.1, 32);
        let vh: Vec<Complex64> = g
            .nodes
            .iter()
            .map(|n| Complex64::new((2.0 * PI).powf(-1.5) * (-0.5 * n.p.norm2()).exp(), 0.0))
            .collect();
        let x = [Vec3::ZERO, Vec3::new(0.5, -0.2, 0.3)];
        let v = inverse_fourier(&vh, &g, &x).unwrap();
        for (xi, vi) in x.iter().zip(&v) {
            let want = (-0.5 * xi.norm2()).exp();
            assert!((vi.re - want).abs() < 1e-8, "{vi} {want}");
            assert!(vi.im.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_and_mismatch() {
        let g = grid(20.0, 0.1, 4);
        let z = vec![Complex64::new(0.0, 0.0); g.len()];
        let v = inverse_fourier(&z, &g, &[Vec3::new(1.0, 2.0, 3.0)]).unwrap();
        assert_eq!(v[0], Complex64::new(0.0, 0.0));
        assert!(matches!(inverse_fourier(&z[1..], &g, &[]), Err(ReconError::Length(..))));
        assert_eq!(compare_norm(|_| Complex64::new(0.0, 0.0), &z, &g, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn born_baseline_of_zero_model() {
        let g = grid(20.0, 0.1, 4);
        let b = born_reconstruct(&PotentialModel::zero(), &g, &[Vec3::ZERO]);
        assert_eq!(b.v_lin, vec![0.0]);
        assert_eq!(b.v_err, vec![0.0]);
    }

    #[test]
    fn budget_formulas() {
        let params = RegionParams::new(1000.0, 0.01).unwrap();
        let cfg = SolverConfig::default();
        let k = ConstantsTable::default();
        let c = 0.01;
        let b = error_budget(&params, &cfg, c, &k, &[0.0, 1.0], RunNumbers::default()).unwrap();
        let rep = check_feasibility(&cfg, c, 0.01, 1000.0, &k);
        let b4 = 3.0 / PI;
        let q = 3.0 * b4 / ((1.0 - 2.0 * rep.c8 * rep.r_min.unwrap()) * (1.0 - rep.eta).powi(2));
        assert!((b.q_factor.unwrap() - q).abs() < 1e-12 * q);
        assert!((b.c5 - 3.0 * b4 / (0.125 * 0.02f64.powi(2))).abs() < 1e-9 * b.c5);
        let scale = c * c / 21.0f64.powi(2);
        assert!((b.profile[1].1 - q * scale / 4.0).abs() < 1e-12 * q * scale);
        let zero = error_budget(&params, &cfg, 0.0, &k, &[0.5], RunNumbers::default()).unwrap();
        assert_eq!(zero.profile[0].1, 0.0);
    }
}
