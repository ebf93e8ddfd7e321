//! The contraction step: constants, feasibility conditions, successive
//! approximations `U_{n+1} = H⁰ + M(U_n)`, and stability comparisons.
//!
//! With placeholder constants the feasibility report is advisory and
//! convergence is judged by the iteration itself. With user-supplied
//! constants an infeasible configuration is rejected unless overridden.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cauchy::{apply_m, AmplitudeField, FieldError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("successive approximations did not converge after {} iterations (last change {:.3e})", .0.diffs.len(), .0.diffs.last().copied().unwrap_or(f64::NAN))]
    NotConverged(Box<IterationTrace>),
    #[error("feasibility conditions violated: {0}")]
    FeasibilityViolated(String),
    #[error("eta = {0:.4} is not below 1")]
    EtaTooLarge(f64),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("empty field")]
    EmptyField,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Constants of the a-priori estimates. Unknown in closed form, so every
/// value defaults to 1 and is flagged as a placeholder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantsTable {
    pub a_mu: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub placeholder: bool,
}

impl Default for ConstantsTable {
    fn default() -> Self {
        Self {
            a_mu: 1.0,
            b1: 1.0,
            b2: 1.0,
            b3: 1.0,
            n1: 1.0,
            n2: 1.0,
            n3: 1.0,
            placeholder: true,
        }
    }
}

impl ConstantsTable {
    pub fn validate(&self) -> Result<(), SolverError> {
        let all = [self.a_mu, self.b1, self.b2, self.b3, self.n1, self.n2, self.n3];
        if all.iter().all(|&c| c > 0.0 && c.is_finite()) {
            Ok(())
        } else {
            Err(SolverError::InvalidConfig("constants must be positive and finite".into()))
        }
    }

    /// `b₄ = (b₁n₁ + b₂n₂ + b₃n₃)/π`.
    pub fn b4(&self) -> f64 {
        (self.b1 * self.n1 + self.b2 * self.n2 + self.b3 * self.n3) / std::f64::consts::PI
    }

    pub fn b(&self) -> [f64; 3] {
        [self.b1, self.b2, self.b3]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub mu: f64,
    pub mu0: f64,
    pub delta: f64,
    pub max_iterations: usize,
    /// Stopping tolerance relative to `|||H⁰|||`.
    pub tol_fp: f64,
    /// Radius of the contraction ball; `r_min` when absent.
    pub r: Option<f64>,
    /// `‖v̂‖_μ`; estimated from the data when absent.
    pub c_norm: Option<f64>,
    /// Solve even when enforced feasibility fails.
    pub override_feasibility: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 4.0,
            mu0: 2.0,
            delta: 0.5,
            max_iterations: 30,
            tol_fp: 1e-10,
            r: None,
            c_norm: None,
            override_feasibility: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.into()));
        if !(self.mu0 >= 2.0 && self.mu0 < self.mu) {
            return bad("need 2 <= mu0 < mu");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.tol_fp > 0.0) {
            return bad("tol_fp must be positive");
        }
        if let Some(r) = self.r {
            if !(r > 0.0) {
                return bad("r must be positive");
            }
        }
        Ok(())
    }
}

/// `η = a(μ) C (ln ρ)² / ρ`.
pub fn eta(c: f64, rho: f64, _mu: f64, constants: &ConstantsTable) -> f64 {
    let l = rho.ln();
    constants.a_mu * c * l * l / rho
}

/// `c₈ = 3b₁τ² + 4b₂/ρ + 4b₃τ`.
pub fn c8(_mu: f64, tau: f64, rho: f64, constants: &ConstantsTable) -> f64 {
    3.0 * constants.b1 * tau * tau + 4.0 * constants.b2 / rho + 4.0 * constants.b3 * tau
}

/// `r_min = 2C/(1−η) + (2b₄C²/(1−η)²)(1 + 3/(1+2τρ)^{μ−μ₀})`.
pub fn r_min(
    mu: f64,
    mu0: f64,
    tau: f64,
    rho: f64,
    c: f64,
    constants: &ConstantsTable,
) -> Result<f64, SolverError> {
    let e = eta(c, rho, mu, constants);
    if !(e < 1.0) {
        return Err(SolverError::EtaTooLarge(e));
    }
    let q = 1.0 - e;
    let tail = 1.0 + 3.0 / (1.0 + 2.0 * tau * rho).powf(mu - mu0);
    Ok(2.0 * c / q + 2.0 * constants.b4() * c * c / (q * q) * tail)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub eta: f64,
    pub c8: f64,
    pub r_min: Option<f64>,
    /// `ln ρ ≥ 2`.
    pub log_rho_ok: bool,
    /// `η < 1`.
    pub eta_ok: bool,
    /// `r_min < 1/(2c₈)`.
    pub contraction_ok: bool,
    /// `η < δ` and `2c₈ r_min < δ`.
    pub delta_ok: bool,
    /// Largest feasible τ at this ρ, by bisection.
    pub tau1: Option<f64>,
    /// Smallest feasible ρ at this τ, by bisection.
    pub rho1: Option<f64>,
    /// Whether the report is binding (user-supplied constants).
    pub enforced: bool,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.log_rho_ok && self.eta_ok && self.contraction_ok && self.delta_ok
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if !self.log_rho_ok {
            v.push("ln rho < 2");
        }
        if !self.eta_ok {
            v.push("eta >= 1");
        }
        if !self.contraction_ok {
            v.push("r_min >= 1/(2 c8)");
        }
        if !self.delta_ok {
            v.push("eta >= delta or 2 c8 r_min >= delta");
        }
        v
    }
}

fn conditions(config: &SolverConfig, c: f64, tau: f64, rho: f64, k: &ConstantsTable) -> (f64, f64, Option<f64>, [bool; 4]) {
    let e = eta(c, rho, config.mu, k);
    let c8v = c8(config.mu, tau, rho, k);
    let rm = r_min(config.mu, config.mu0, tau, rho, c, k).ok();
    let log_ok = rho.ln() >= 2.0;
    let eta_ok = e < 1.0;
    let contr = rm.is_some_and(|r| r < 1.0 / (2.0 * c8v));
    let delta = e < config.delta && rm.is_some_and(|r| 2.0 * c8v * r < config.delta);
    (e, c8v, rm, [log_ok, eta_ok, contr, delta])
}

fn feasible_at(config: &SolverConfig, c: f64, tau: f64, rho: f64, k: &ConstantsTable) -> bool {
    conditions(config, c, tau, rho, k).3.iter().all(|&b| b)
}

pub fn check_feasibility(
    config: &SolverConfig,
    c: f64,
    tau: f64,
    rho: f64,
    constants: &ConstantsTable,
) -> FeasibilityReport {
    let (e, c8v, rm, [log_rho_ok, eta_ok, contraction_ok, delta_ok]) = conditions(config, c, tau, rho, constants);

    let tau1 = {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if !feasible_at(config, c, 1e-12, rho, constants) {
            None
        } else {
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if feasible_at(config, c, mid.max(1e-12), rho, constants) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(lo)
        }
    };
    let rho1 = {
        let (mut lo, mut hi) = (2.0f64, 40.0f64);
        let at = |l: f64| feasible_at(config, c, tau, l.exp(), constants);
        if !at(hi) {
            None
        } else if at(lo) {
            Some(lo.exp())
        } else {
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if at(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi.exp())
        }
    };
    FeasibilityReport {
        eta: e,
        c8: c8v,
        r_min: rm,
        log_rho_ok,
        eta_ok,
        contraction_ok,
        delta_ok,
        tau1,
        rho1,
        enforced: !constants.placeholder,
    }
}

/// `max (1+|p|)^μ₀ |U|` over all nodes.
pub fn field_norm(field: &AmplitudeField, mu0: f64) -> Result<f64, SolverError> {
    field.norm(mu0).map_err(|e| match e {
        FieldError::EmptyField => SolverError::EmptyField,
        e => e.into(),
    })
}

/// Per-iteration record of the successive approximations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// `|||U_{n+1} − U_n|||` for `n = 0, 1, …`.
    pub diffs: Vec<f64>,
    /// `|||H̃ − H⁰ − M(H̃)|||` of the returned field.
    pub residual: f64,
    pub converged: bool,
    /// Stopping threshold actually used.
    pub threshold: f64,
    /// Bracket nodes dropped because an evaluation point left the domain.
    pub skipped: usize,
    pub evaluated: usize,
}

impl IterationTrace {
    /// `diffs[n+1] / diffs[n]`.
    pub fn ratios(&self) -> Vec<f64> {
        self.diffs
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("# successive approximations\n# columns iteration diff_norm ratio\n");
        let ratios = self.ratios();
        for (n, d) in self.diffs.iter().enumerate() {
            let r = if n == 0 { f64::NAN } else { ratios[n - 1] };
            let _ = writeln!(out, "{n} {d:.16e} {r:.16e}");
        }
        let _ = writeln!(out, "# residual {:.16e} converged {}", self.residual, self.converged);
        out
    }
}

/// Everything the solver needs besides `H⁰`.
#[derive(Clone, Debug)]
pub struct SolveSettings<'a> {
    pub config: &'a SolverConfig,
    pub constants: &'a ConstantsTable,
    /// `‖v̂‖_μ` used in the feasibility conditions.
    pub c_norm: f64,
    pub n_phi: usize,
}

/// Solution of the fixed-point problem.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub field: AmplitudeField,
    pub trace: IterationTrace,
    pub feasibility: FeasibilityReport,
    /// Radius of the contraction ball used for the report.
    pub r: Option<f64>,
    /// `|||H⁰||| ≤ r/2`.
    pub h0_in_half_ball: Option<bool>,
}

/// Successive approximations from `init` (zero when `None`).
pub fn solve_fixed_point(
    h0: &AmplitudeField,
    settings: &SolveSettings<'_>,
    init: Option<&AmplitudeField>,
) -> Result<FixedPoint, SolverError> {
    let cfg = settings.config;
    cfg.validate()?;
    settings.constants.validate()?;
    if h0.is_empty() {
        return Err(SolverError::EmptyField);
    }
    let params = &h0.params;
    let feas = check_feasibility(cfg, settings.c_norm, params.tau, params.rho, settings.constants);
    if feas.enforced && !feas.feasible() && !cfg.override_feasibility {
        return Err(SolverError::FeasibilityViolated(feas.failures().join(", ")));
    }
    let r = cfg.r.or(feas.r_min);
    let h0_norm = field_norm(h0, cfg.mu0)?;
    let threshold = cfg.tol_fp * h0_norm.max(f64::MIN_POSITIVE);

    let mut trace = IterationTrace {
        threshold,
        ..Default::default()
    };
    let mut current = match init {
        Some(f) => f.clone(),
        None => h0.scaled(Complex64::new(0.0, 0.0)),
    };
    for _ in 0..cfg.max_iterations {
        let m = apply_m(&current, settings.n_phi)?;
        trace.skipped += m.skipped;
        trace.evaluated += m.evaluated;
        let next = h0.combine(Complex64::new(1.0, 0.0), &m.field, Complex64::new(1.0, 0.0));
        let diff = field_norm(&next.combine(Complex64::new(1.0, 0.0), &current, Complex64::new(-1.0, 0.0)), cfg.mu0)?;
        trace.diffs.push(diff);
        if diff <= threshold {
            // `current` solves the equation up to exactly this difference.
            trace.residual = diff;
            trace.converged = true;
            return Ok(FixedPoint {
                field: current,
                trace,
                feasibility: feas,
                r,
                h0_in_half_ball: r.map(|r| h0_norm <= 0.5 * r),
            });
        }
        current = next;
    }
    trace.residual = trace.diffs.last().copied().unwrap_or(f64::NAN);
    Err(SolverError::NotConverged(Box::new(trace)))
}

/// Solution difference, input difference and the factor `(1 − 2c₈r)⁻¹`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityComparison {
    pub solution_diff: f64,
    pub input_diff: f64,
    pub bound_factor: Option<f64>,
}

pub fn stability_compare(
    h0_a: &AmplitudeField,
    h0_b: &AmplitudeField,
    settings: &SolveSettings<'_>,
) -> Result<(StabilityComparison, FixedPoint, FixedPoint), SolverError> {
    let a = solve_fixed_point(h0_a, settings, None)?;
    let b = solve_fixed_point(h0_b, settings, None)?;
    let mu0 = settings.config.mu0;
    let one = Complex64::new(1.0, 0.0);
    let solution_diff = field_norm(&a.field.combine(one, &b.field, -one), mu0)?;
    let input_diff = field_norm(&h0_a.combine(one, h0_b, -one), mu0)?;
    let bound_factor = a.r.and_then(|r| {
        let x = 2.0 * a.feasibility.c8 * r;
        (x < 1.0).then(|| 1.0 / (1.0 - x))
    });
    Ok((
        StabilityComparison {
            solution_diff,
            input_diff,
            bound_factor,
        },
        a,
        b,
    ))
}
