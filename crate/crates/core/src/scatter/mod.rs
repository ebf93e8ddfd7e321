//! Forward problem: Gaussian test potentials, the amplitude `H(k, p)` by
//! Neumann iteration, and sampling of boundary data on the circles
//! `|Im k| = ρ` over the momentum ball.

mod data;
mod forward;
mod potential;

use thiserror::Error;

pub use data::{high_energy_limit_check, sample_boundary, ScatteringData};
pub use forward::{faddeev_h, ForwardSolver, ForwardValue, QuadratureConfig};
pub use potential::{norm_mu, radial_samples, GaussianTerm, PotentialModel};

use crate::geometry::GeometryError;
use crate::grid::GridError;

#[derive(Debug, Error)]
pub enum ScatterError {
    #[error("invalid potential or quadrature setting: {0}")]
    InvalidModel(String),
    #[error("empty sample grid")]
    EmptyGrid,
    #[error("forward quadrature did not converge (last change {estimate:.3e}, allowed {tolerance:.3e})")]
    QuadratureFailure { estimate: f64, tolerance: f64 },
    #[error("k has a vanishing real or imaginary part")]
    DegenerateK,
    #[error("at momentum node {index}: {source}")]
    AtNode {
        index: usize,
        #[source]
        source: Box<ScatterError>,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("malformed scattering data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
