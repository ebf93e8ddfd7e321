//! ∂̄ machinery in the `(λ, p)` coordinates: the nonlinear bracket, boundary
//! and area Cauchy transforms, the boundary operator `T_b`, and storage and
//! interpolation of fields on `Λ`.
//!
//! Area integrals are written in the bounded chart `u` (`u = λ` on `D⁺`,
//! `u = 1/λ` on `D⁻`). Both the `D⁺` and `D⁻` transforms then take the form
//! `−(1/π)∬_{|u|<R₊} G(w)/(w−u) dA(w)`, where `G = g` on the `+` side and
//! `G(w) = −g(1/w)/w̄²` on the `−` side for a right-hand side `g(λ)`.

mod bracket;
mod field;
mod kernels;
mod remainder;
mod transform;

use thiserror::Error;

pub use bracket::{
    bracket, bracket_bound, bracket_kform, bracket_on_windows, bracket_uncut, bracket_weight, mask_windows,
    support_windows, BracketValue, MaskSide, Masked, ModelSource,
};
pub use field::AmplitudeField;
pub use kernels::{kernel_bound, kernel_integral_dminus, kernel_integral_dplus, kernel_u, Kernel};
pub use remainder::{remainder_diagnostics, RemainderReport};
pub use transform::{
    apply_i, apply_m, area_source, cauchy_area, cauchy_boundary, cauchy_boundary_trapezoid, h0_field,
    t_b, t_b_norm, vhat_area_term, AreaOutput, BoundaryTransform, T_B_OFFSET,
};

use num_complex::Complex64;

use crate::geometry::{lambda_from_k_unchecked, CVec3, Frame, GeometryError, Vec3};
use crate::grid::GridError;
use crate::scatter::ScatterError;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("point lies outside the field domain")]
    OutOfDomain,
    #[error("momentum {0} is not a node of the momentum grid")]
    MomentumOffGrid(Vec3),
    #[error("field has {found} values, grid needs {expected}")]
    Shape { expected: usize, found: usize },
    #[error("empty field")]
    EmptyField,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Scatter(#[from] ScatterError),
}

/// `χ_r(p)`: 1 for `|p| < r`, else 0.
pub fn chi(r: f64, p: Vec3) -> f64 {
    if p.norm() < r {
        1.0
    } else {
        0.0
    }
}

/// Anything that can be evaluated as `U(λ, p)` on the variety.
pub trait AmplitudeSource: Sync {
    /// `U` at chart point `λ` over the momentum of `frame`.
    fn eval(&self, lambda: Complex64, frame: &Frame) -> Result<Complex64, FieldError>;

    /// `U(k, p)` for a point `(k, p)` given in the ambient coordinates.
    fn eval_kp(&self, k: CVec3, frame: &Frame) -> Result<Complex64, FieldError> {
        self.eval(lambda_from_k_unchecked(k, frame), frame)
    }
}

impl AmplitudeSource for AmplitudeField {
    fn eval(&self, lambda: Complex64, frame: &Frame) -> Result<Complex64, FieldError> {
        self.eval_in_frame(lambda, frame)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_cases() {
        assert_eq!(chi(2.0, Vec3::new(1.0, 0.0, 0.0)), 1.0);
        assert_eq!(chi(2.0, Vec3::new(2.0, 0.0, 0.0)), 0.0);
        assert_eq!(chi(2.0, Vec3::new(3.0, 0.0, 0.0)), 0.0);
    }
}
