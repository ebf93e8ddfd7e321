//! Cutoff remainder: the three brackets in which at least one factor lives
//! outside the ball `|p| < 2τρ`, and its area transform `Q`.

use num_complex::Complex64;

use super::transform::{chart_rhs, Cells};
use super::{bracket_on_windows, mask_windows, AmplitudeSource, FieldError, MaskSide, Masked};
use crate::geometry::{from_chart, Hemisphere, RegionParams, ShiftCircle, Vec3};
use crate::grid::LambdaGrid;

/// Sup norms of the remainder and of its transform at sample momenta.
#[derive(Clone, Debug, PartialEq)]
pub struct RemainderReport {
    pub samples: Vec<Vec3>,
    /// `max |R(λ, p)|` over the cell centres, per sample momentum.
    pub r_sup: Vec<f64>,
    /// `max (1+|p|)^μ₀ |Q(λ, p)|` over the ring nodes, per sample momentum.
    pub q_sup: Vec<f64>,
    pub q_norm: f64,
    /// `(1+2τρ)^{−(μ−μ₀)}`, the scale both norms are compared against.
    pub decay_scale: f64,
}

const PAIRS: [(MaskSide, MaskSide); 3] = [
    (MaskSide::Outside, MaskSide::Inside),
    (MaskSide::Inside, MaskSide::Outside),
    (MaskSide::Outside, MaskSide::Outside),
];

fn remainder_at<S: AmplitudeSource + ?Sized>(
    source: &S,
    lambda: num_complex::Complex64,
    frame: &crate::geometry::Frame,
    radius: f64,
    n_phi: usize,
) -> Result<Complex64, FieldError> {
    let circle = ShiftCircle::new(lambda, frame)?;
    let mut total = Complex64::new(0.0, 0.0);
    for (s1, s2) in PAIRS {
        let windows = mask_windows(&circle, frame, radius, s1, s2);
        if windows.is_empty() {
            continue;
        }
        let a = Masked {
            inner: source,
            radius,
            side: s1,
        };
        let b = Masked {
            inner: source,
            radius,
            side: s2,
        };
        total += bracket_on_windows(&a, &b, lambda, frame, &windows, n_phi)?.value;
    }
    Ok(total)
}

/// Evaluates `R` at the cell centres of each sample momentum and `Q` at its
/// ring nodes. `source` must be valid for all momenta, not just the ball.
pub fn remainder_diagnostics<S: AmplitudeSource + ?Sized>(
    source: &S,
    params: &RegionParams,
    grid: &LambdaGrid,
    samples: &[Vec3],
    n_phi: usize,
    mu: f64,
    mu0: f64,
) -> Result<RemainderReport, FieldError> {
    let radius = params.ball_radius();
    let mut r_sup = Vec::with_capacity(samples.len());
    let mut q_sup = Vec::with_capacity(samples.len());
    for &p in samples {
        let frame = params.frame(p)?;
        let cells = Cells::new(grid, params.rho, frame.p_norm);
        let mut rmax = 0.0f64;
        let mut qmax = 0.0f64;
        for hemi in Hemisphere::BOTH {
            let mut g = Vec::with_capacity(cells.centers.len());
            for &w in &cells.centers {
                let r = remainder_at(source, from_chart(hemi, w), &frame, radius, n_phi)?;
                rmax = rmax.max(r.norm());
                g.push(chart_rhs(hemi, w, r));
            }
            for a in 0..grid.n_rings() {
                let ur = LambdaGrid::chart_radius(params.rho, frame.p_norm, grid.levels[a]);
                for b in 0..grid.n_angles {
                    let u = Complex64::from_polar(ur, grid.angle(b));
                    qmax = qmax.max(cells.transform(&g, u).norm());
                }
            }
        }
        r_sup.push(rmax);
        q_sup.push((1.0 + frame.p_norm).powf(mu0) * qmax);
    }
    let q_norm = q_sup.iter().copied().fold(0.0, f64::max);
    Ok(RemainderReport {
        samples: samples.to_vec(),
        r_sup,
        q_sup,
        q_norm,
        decay_scale: (1.0 + radius).powf(-(mu - mu0)),
    })
}
