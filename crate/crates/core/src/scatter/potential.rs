use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ScatterError;
use crate::geometry::{OmegaPoint, Vec3};

/// One Gaussian bump `A·exp(−|x−c|²/(2w²))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub center: Vec3,
    pub width: f64,
}

impl GaussianTerm {
    /// `A w³ (2π)^{−3/2}`, the value of the transform at `p = 0`.
    pub fn spectral_amplitude(&self) -> f64 {
        self.amplitude * self.width.powi(3) * (2.0 * PI).powf(-1.5)
    }
}

/// Real potential given as a finite sum of Gaussians.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialModel {
    pub terms: Vec<GaussianTerm>,
}

impl PotentialModel {
    pub fn new(terms: Vec<GaussianTerm>) -> Result<Self, ScatterError> {
        let m = Self { terms };
        m.validate()?;
        Ok(m)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Single Gaussian centred at the origin.
    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        Self {
            terms: vec![GaussianTerm {
                amplitude,
                center: Vec3::ZERO,
                width,
            }],
        }
    }

    pub fn validate(&self) -> Result<(), ScatterError> {
        for (i, t) in self.terms.iter().enumerate() {
            if !(t.width > 0.0 && t.width.is_finite()) {
                return Err(ScatterError::InvalidModel(format!("term {i}: width must be positive")));
            }
            if !t.amplitude.is_finite() || !t.center.is_finite() {
                return Err(ScatterError::InvalidModel(format!("term {i}: non-finite parameter")));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    /// Same shape, amplitudes multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| GaussianTerm {
                    amplitude: t.amplitude * alpha,
                    ..*t
                })
                .collect(),
        }
    }

    /// `v(x)`.
    pub fn v(&self, x: Vec3) -> f64 {
        self.terms
            .iter()
            .map(|t| t.amplitude * (-(x - t.center).norm2() / (2.0 * t.width * t.width)).exp())
            .sum()
    }

    /// `v̂(p) = (2π)^{−3} ∫ e^{ip·x} v(x) dx`.
    pub fn vhat(&self, p: Vec3) -> Complex64 {
        let p2 = p.norm2();
        self.terms
            .iter()
            .map(|t| {
                let mag = t.spectral_amplitude() * (-0.5 * t.width * t.width * p2).exp();
                Complex64::from_polar(mag, p.dot(t.center))
            })
            .sum()
    }

    /// Born value of `H(k, p)`: `v̂(p)`, independent of `k`.
    pub fn born_h(&self, point: &OmegaPoint) -> Complex64 {
        self.vhat(point.p)
    }

    /// Largest width of the transform, `max 1/w`.
    pub fn max_spectral_width(&self) -> f64 {
        self.terms.iter().map(|t| 1.0 / t.width).fold(0.0, f64::max)
    }
}

/// `max (1+|p|)^μ |v̂(p)|` over the samples: a lower estimate of the sup norm.
pub fn norm_mu(model: &PotentialModel, mu: f64, samples: &[Vec3]) -> Result<f64, ScatterError> {
    if samples.is_empty() {
        return Err(ScatterError::EmptyGrid);
    }
    if !(mu >= 2.0) {
        return Err(ScatterError::InvalidModel("mu must be at least 2".into()));
    }
    Ok(samples
        .iter()
        .map(|&p| (1.0 + p.norm()).powf(mu) * model.vhat(p).norm())
        .fold(0.0, f64::max))
}

/// Radial sample points `r·ê` for `r` uniform in `[0, r_max]` along a fixed direction.
pub fn radial_samples(r_max: f64, n: usize) -> Vec<Vec3> {
    let dir = Vec3::new(0.48, 0.6, 0.64);
    (0..n)
        .map(|i| dir * (r_max * i as f64 / (n.max(2) - 1) as f64))
        .collect()
}
