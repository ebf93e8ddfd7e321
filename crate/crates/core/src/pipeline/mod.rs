//! Configuration, the end-to-end scheme, ρ-sweeps, stability probes,
//! diagnostics, and report files.
//!
//! Every run is a pure function of its configuration (and data file in
//! reconstruct mode). Reports never contain wall-clock values or the worker
//! count; timings go to a separate `timing.txt`.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use config::{
    ConstantOverrides, DiagnosticsConfig, ForwardConfig, Mode, RegionConfig, RunConfig, StabilityConfig,
    SweepConfig,
};

use crate::cauchy::{h0_field, remainder_diagnostics, t_b_norm, AmplitudeField, FieldError, ModelSource, RemainderReport};
use crate::geometry::{Hemisphere, Vec3};
use crate::grid::{LambdaGrid, SpatialGrid};
use crate::quadrature::log_log_slope;
use crate::recon::{
    born_reconstruct, compare_norm, error_budget, reconstruct, ErrorBudget, ExtractionRule, ReconError,
    ReconstructionResult, RunNumbers,
};
use crate::scatter::{
    high_energy_limit_check, norm_mu, radial_samples, sample_boundary, ForwardSolver, PotentialModel, ScatterError,
    ScatteringData,
};
use crate::solver::{
    check_feasibility, eta, field_norm, solve_fixed_point, ConstantsTable, FeasibilityReport, FixedPoint,
    IterationTrace, SolveSettings, SolverError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("synthesis: {0}")]
    Synthesize(#[source] ScatterError),
    #[error("reading data: {0}")]
    Data(#[source] ScatterError),
    #[error("initial field: {0}")]
    Transform(#[source] FieldError),
    #[error("solver: {0}")]
    Solve(#[source] SolverError),
    #[error("reconstruction: {0}")]
    Reconstruct(#[source] ReconError),
    #[error("diagnostics: {0}")]
    Diagnostics(String),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 not converged, 3 infeasible, 4 I/O, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use SolverError::{FeasibilityViolated, NotConverged};
        match self {
            Self::Solve(NotConverged(_)) => 2,
            Self::Solve(FeasibilityViolated(_)) | Self::Reconstruct(ReconError::Solver(FeasibilityViolated(_))) => 3,
            Self::Io { .. } | Self::Data(ScatterError::Io(_)) => 4,
            _ => 1,
        }
    }
}

/// Errors of `v̂±` and `v±` against a known potential.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    /// `max (1+|p|)^μ₀ |v̂ − v̂⁺|` over the grid.
    pub vhat_error_plus: f64,
    pub vhat_error_minus: f64,
    /// `max (1+|p|)^μ₀ |v̂⁺ − v̂⁻|`.
    pub pm_deviation: f64,
    /// `max |v − v±|` over the spatial grid.
    pub spatial_error_plus: f64,
    pub spatial_error_minus: f64,
    /// `max |v − v_lin|` of the linear reconstruction on the same ball.
    pub born_error: f64,
}

impl Comparison {
    pub fn vhat_error(&self) -> f64 {
        self.vhat_error_plus.max(self.vhat_error_minus)
    }

    pub fn spatial_error(&self) -> f64 {
        self.spatial_error_plus.max(self.spatial_error_minus)
    }
}

/// Summary of one reconstruction.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub rho: f64,
    pub tau: f64,
    pub ball_radius: f64,
    pub n_momenta: usize,
    /// `‖v̂‖_μ` used in the feasibility conditions.
    pub c_norm: f64,
    /// `configured`, `model` or `data estimate`.
    pub c_norm_source: String,
    pub h0_norm: f64,
    /// `(C/(1−η))(1 + b₄C/(1−η))`, when `η < 1`.
    pub h0_bound: Option<f64>,
    pub t_b_norm: f64,
    pub feasibility: FeasibilityReport,
    pub h0_in_half_ball: Option<bool>,
    pub trace: IterationTrace,
    pub budget: ErrorBudget,
    /// `max |Im v±(x)|`.
    pub imag_max: f64,
    pub skipped: usize,
    pub comparison: Option<Comparison>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Rung {
    pub rho: f64,
    pub ball_radius: f64,
    pub n_shells: usize,
    pub n_phi: usize,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

impl Rung {
    fn comparison(&self) -> Option<&Comparison> {
        self.summary.as_ref().and_then(|s| s.comparison.as_ref())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub rungs: Vec<Rung>,
    /// Log-log slope of `max± ‖v̂ − v̂±‖` against `ρ`; `None` when undefined.
    pub slope: Option<f64>,
    /// Same for the spatial error of the linear reconstruction.
    pub born_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRow {
    pub epsilon: f64,
    /// `max± ‖v̂₁± − v̂₂±‖` on the ball.
    pub vhat_diff: f64,
    /// `‖T_b(H₁ − H₂)‖`.
    pub t_b_diff: f64,
    /// `(1−δ)⁻¹ ‖T_b(H₁ − H₂)‖`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub seed: u64,
    pub rows: Vec<StabilityRow>,
    /// `vhat_diff` of the last ε over the first.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub c_norm: f64,
    pub feasibility: FeasibilityReport,
    /// `(ρ, |v̂(p) − H(k,p)|)` on `|Im k| = ρ`.
    pub high_energy: Vec<(f64, f64)>,
    pub high_energy_slope: Option<f64>,
    pub remainder: RemainderReportRow,
    pub h0_norm: f64,
    pub h0_bound: Option<f64>,
    pub t_b_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RemainderReportRow {
    pub samples: Vec<Vec3>,
    pub r_sup: Vec<f64>,
    pub q_sup: Vec<f64>,
    pub q_norm: f64,
    pub decay_scale: f64,
}

impl From<RemainderReport> for RemainderReportRow {
    fn from(r: RemainderReport) -> Self {
        Self {
            samples: r.samples,
            r_sup: r.r_sup,
            q_sup: r.q_sup,
            q_norm: r.q_norm,
            decay_scale: r.decay_scale,
        }
    }
}

/// Everything a run produces. Only the serialised part goes into `report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub mode: Mode,
    pub config: RunConfig,
    pub run: Option<RunSummary>,
    pub sweep: Option<SweepReport>,
    pub stability: Option<StabilityReport>,
    pub diagnostics: Option<DiagnosticsReport>,
    /// Output files `(name, contents)`.
    #[serde(skip)]
    pub files: Vec<(String, String)>,
    /// Stage wall-clock seconds.
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl Report {
    fn new(cfg: &RunConfig, mode: Mode) -> Self {
        let mut echo = cfg.clone();
        echo.mode = mode;
        echo.workers = None;
        echo.out_dir = PathBuf::from(".");
        Self {
            mode,
            config: echo,
            run: None,
            sweep: None,
            stability: None,
            diagnostics: None,
            files: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

struct Timer(Vec<(String, f64)>, Instant);

impl Timer {
    fn new() -> Self {
        Self(Vec::new(), Instant::now())
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.0.push((stage.to_string(), (now - self.1).as_secs_f64()));
        self.1 = now;
    }
}

pub fn synthesize(cfg: &RunConfig) -> Result<ScatteringData, PipelineError> {
    let params = cfg.region.params()?;
    sample_boundary(
        &cfg.potential,
        &params,
        &cfg.grid,
        cfg.forward.iterations,
        &cfg.forward.quadrature,
    )
    .map_err(PipelineError::Synthesize)
}

fn c_norm_for(cfg: &RunConfig, data: &ScatteringData, truth: Option<&PotentialModel>) -> (f64, String) {
    let mu = cfg.solver.mu;
    if let Some(c) = cfg.solver.c_norm {
        return (c, "configured".into());
    }
    if let Some(m) = truth {
        let r_max = data.params.ball_radius().max(40.0 * m.max_spectral_width());
        let mut samples = radial_samples(r_max, 2001);
        samples.extend(data.momentum.nodes.iter().map(|n| n.p));
        let c = norm_mu(m, mu, &samples).unwrap_or(0.0);
        return (c, "model".into());
    }
    let c = (0..data.momentum.len())
        .map(|node| {
            let circle = data.circle(node, Hemisphere::Plus);
            let mean = circle.iter().sum::<Complex64>() / circle.len() as f64;
            (1.0 + data.momentum.nodes[node].p.norm()).powf(mu) * mean.norm()
        })
        .fold(0.0, f64::max);
    (c, "data estimate".into())
}

fn h0_bound(c: f64, rho: f64, mu: f64, constants: &ConstantsTable) -> Option<f64> {
    let e = eta(c, rho, mu, constants);
    (e < 1.0).then(|| (c / (1.0 - e)) * (1.0 + constants.b4() * c / (1.0 - e)))
}

/// Result of [`reconstruct_data`].
pub struct Reconstruction {
    pub summary: RunSummary,
    pub h0: AmplitudeField,
    pub fixed_point: FixedPoint,
    pub result: ReconstructionResult,
    pub born: Option<Vec<f64>>,
    pub truth: Option<Vec<f64>>,
}

/// `H⁰` from the data, the fixed point, extraction and synthesis. The
/// grids are those stored with the data.
pub fn reconstruct_data(
    cfg: &RunConfig,
    data: &ScatteringData,
    truth: Option<&PotentialModel>,
) -> Result<Reconstruction, PipelineError> {
    let params = data.params;
    let spec = &data.grid;
    let constants = cfg.constants.table();
    let (c, c_src) = c_norm_for(cfg, data, truth);
    let lambda = LambdaGrid::new(spec);
    let h0 = h0_field(data, &lambda);
    let mu0 = cfg.solver.mu0;
    let h0_norm = field_norm(&h0, mu0).map_err(PipelineError::Solve)?;
    let tb = t_b_norm(data, mu0).map_err(PipelineError::Transform)?;
    let settings = SolveSettings {
        config: &cfg.solver,
        constants: &constants,
        c_norm: c,
        n_phi: spec.n_phi,
    };
    let fp = solve_fixed_point(&h0, &settings, None).map_err(PipelineError::Solve)?;
    let total = fp.trace.evaluated + fp.trace.skipped;
    let run = RunNumbers {
        solver_residual: fp.trace.residual,
        data_quadrature_error: data.max_error(),
        skipped_fraction: if total > 0 { fp.trace.skipped as f64 / total as f64 } else { 0.0 },
    };
    let budget = error_budget(&params, &cfg.solver, c, &constants, &data.momentum.shells, run)
        .map_err(PipelineError::Reconstruct)?;
    let points = SpatialGrid::from_spec(spec).points;
    let rule = ExtractionRule {
        n_phi: spec.n_phi,
        n_radial: spec.n_area_radial,
        n_angular: spec.n_area_angular,
    };
    let result = reconstruct(&fp.field, data, rule, &points, budget.clone()).map_err(PipelineError::Reconstruct)?;

    let (comparison, born, truth_v) = match truth {
        Some(m) => {
            let g = &data.momentum;
            let err = |v: &[Complex64]| compare_norm(|p| m.vhat(p), v, g, mu0).map_err(PipelineError::Reconstruct);
            let pm = compare_norm(
                |p| result.vhat_minus[g.find(p).expect("grid momentum")],
                &result.vhat_plus,
                g,
                mu0,
            )
            .map_err(PipelineError::Reconstruct)?;
            let born = born_reconstruct(m, g, &points);
            let v_true: Vec<f64> = points.iter().map(|&x| m.v(x)).collect();
            let sup = |v: &[f64]| v.iter().zip(&v_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let cmp = Comparison {
                vhat_error_plus: err(&result.vhat_plus)?,
                vhat_error_minus: err(&result.vhat_minus)?,
                pm_deviation: pm,
                spatial_error_plus: sup(&result.v_plus),
                spatial_error_minus: sup(&result.v_minus),
                born_error: born.v_err.iter().map(|e| e.abs()).fold(0.0, f64::max),
            };
            (Some(cmp), Some(born.v_lin), Some(v_true))
        }
        None => (None, None, None),
    };

    let summary = RunSummary {
        rho: params.rho,
        tau: params.tau,
        ball_radius: params.ball_radius(),
        n_momenta: data.momentum.len(),
        c_norm: c,
        c_norm_source: c_src,
        h0_norm,
        h0_bound: h0_bound(c, params.rho, cfg.solver.mu, &constants),
        t_b_norm: tb,
        feasibility: fp.feasibility.clone(),
        h0_in_half_ball: fp.h0_in_half_ball,
        trace: fp.trace.clone(),
        budget,
        imag_max: result.imag_max,
        skipped: result.skipped + fp.trace.skipped,
        comparison,
    };
    Ok(Reconstruction {
        summary,
        h0,
        fixed_point: fp,
        result,
        born,
        truth: truth_v,
    })
}

fn truth_of(cfg: &RunConfig) -> Option<&PotentialModel> {
    (!cfg.potential.terms.is_empty() || cfg.mode != Mode::Reconstruct).then_some(&cfg.potential)
}

fn add_reconstruction_files(report: &mut Report, cfg: &RunConfig, data: &ScatteringData, rec: &Reconstruction) {
    let budget = &rec.summary.budget;
    report.files.push(("trace.txt".into(), rec.fixed_point.trace.to_table()));
    report.files.push((
        "vhat.txt".into(),
        rec.result.momentum_table(&data.momentum, |pn| budget.bound_at(pn)),
    ));
    report.files.push((
        "potential.txt".into(),
        rec.result.spatial_table(rec.truth.as_deref(), rec.born.as_deref()),
    ));
    if cfg.write_field {
        report.files.push(("field.txt".into(), rec.fixed_point.field.to_table()));
    }
}

pub fn run_synthesize(cfg: &RunConfig) -> Result<Report, PipelineError> {
    let mut t = Timer::new();
    let data = synthesize(cfg)?;
    t.lap("synthesize");
    let mut report = Report::new(cfg, Mode::Synthesize);
    report.files.push(("data.txt".into(), data.to_table()));
    report.timings = t.0;
    Ok(report)
}

pub fn run_reconstruct(cfg: &RunConfig) -> Result<Report, PipelineError> {
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| PipelineError::Config("reconstruct mode needs 'data'".into()))?;
    let mut t = Timer::new();
    let data = ScatteringData::read(path).map_err(|e| match e {
        ScatterError::Io(io) => PipelineError::io(path, io),
        e => PipelineError::Data(e),
    })?;
    t.lap("read");
    let rec = reconstruct_data(cfg, &data, truth_of(cfg))?;
    t.lap("reconstruct");
    let mut report = Report::new(cfg, Mode::Reconstruct);
    add_reconstruction_files(&mut report, cfg, &data, &rec);
    report.run = Some(rec.summary);
    report.timings = t.0;
    Ok(report)
}

pub fn run_end_to_end(cfg: &RunConfig) -> Result<Report, PipelineError> {
    let mut t = Timer::new();
    let data = synthesize(cfg)?;
    t.lap("synthesize");
    let rec = reconstruct_data(cfg, &data, Some(&cfg.potential))?;
    t.lap("reconstruct");
    let mut report = Report::new(cfg, Mode::EndToEnd);
    report.files.push(("data.txt".into(), data.to_table()));
    add_reconstruction_files(&mut report, cfg, &data, &rec);
    report.run = Some(rec.summary);
    report.timings = t.0;
    Ok(report)
}

/// End-to-end at every `ρ` of the ladder. Failed rungs are kept with their
/// error message.
pub fn run_sweep(cfg: &RunConfig, ladder: &[f64]) -> Result<Report, PipelineError> {
    let mut t = Timer::new();
    let mut rungs = Vec::with_capacity(ladder.len());
    for &rho in ladder {
        let c = cfg.at_rho(rho);
        let outcome = c
            .region
            .params()
            .and_then(|_| synthesize(&c))
            .and_then(|data| reconstruct_data(&c, &data, Some(&c.potential)));
        let (summary, error) = match outcome {
            Ok(rec) => (Some(rec.summary), None),
            Err(e) => (None, Some(e.to_string())),
        };
        rungs.push(Rung {
            rho,
            ball_radius: 2.0 * c.region.tau * rho,
            n_shells: c.grid.n_shells,
            n_phi: c.grid.n_phi,
            summary,
            error,
        });
        t.lap(&format!("rho {rho}"));
    }
    let ok: Vec<(&Rung, &Comparison)> = rungs.iter().filter_map(|r| r.comparison().map(|c| (r, c))).collect();
    let xs: Vec<f64> = ok.iter().map(|(r, _)| r.rho).collect();
    let slope = log_log_slope(&xs, &ok.iter().map(|(_, c)| c.vhat_error()).collect::<Vec<_>>());
    let born_slope = log_log_slope(&xs, &ok.iter().map(|(_, c)| c.born_error).collect::<Vec<_>>());

    let mut table = String::from(
        "# faddeev-sweep 1\n# error of v̂± on the ball against ρ at fixed τ\n# columns rho ball_radius n_shells n_phi vhat_error_plus vhat_error_minus pm_deviation spatial_error born_error iterations\n",
    );
    for r in &rungs {
        match (r.comparison(), &r.summary) {
            (Some(c), Some(s)) => {
                let _ = writeln!(
                    table,
                    "{:.17e} {:.17e} {} {} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {}",
                    r.rho,
                    r.ball_radius,
                    r.n_shells,
                    r.n_phi,
                    c.vhat_error_plus,
                    c.vhat_error_minus,
                    c.pm_deviation,
                    c.spatial_error(),
                    c.born_error,
                    s.trace.diffs.len()
                );
            }
            _ => {
                let _ = writeln!(table, "# rho {:.17e} failed: {}", r.rho, r.error.as_deref().unwrap_or("?"));
            }
        }
    }
    let _ = writeln!(table, "# slope {}", slope.map_or("undefined".to_string(), |s| format!("{s:.6}")));

    let mut report = Report::new(cfg, Mode::Sweep);
    report.sweep = Some(SweepReport {
        rungs,
        slope,
        born_slope,
    });
    report.files.push(("sweep.txt".into(), table));
    report.timings = t.0;
    Ok(report)
}

/// Boundary data plus `ε(1+|p|)^{−μ₀}e^{iθ}` with phases from `seed`.
pub fn perturb(data: &ScatteringData, epsilon: f64, mu0: f64, seed: u64) -> ScatteringData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..data.values.len())
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    data.map(|node, hemi, j, h| {
        let w = (1.0 + data.momentum.nodes[node].p.norm()).powf(-mu0);
        h + epsilon * w * Complex64::from_polar(1.0, phases[data.slot(node, hemi, j)])
    })
}

fn weighted_diff(a: &[Complex64], b: &[Complex64], data: &ScatteringData, mu0: f64) -> f64 {
    data.momentum
        .nodes
        .iter()
        .zip(a.iter().zip(b))
        .map(|(n, (x, y))| (1.0 + n.p.norm()).powf(mu0) * (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn run_stability_probe(cfg: &RunConfig, epsilons: &[f64]) -> Result<Report, PipelineError> {
    let seed = cfg
        .stability
        .seed
        .ok_or_else(|| PipelineError::Config("stability probe needs a seed".into()))?;
    let mut t = Timer::new();
    let data = synthesize(cfg)?;
    t.lap("synthesize");
    let base = reconstruct_data(cfg, &data, None)?;
    t.lap("base");
    let mu0 = cfg.solver.mu0;
    let mut rows = Vec::with_capacity(epsilons.len());
    let mut table = String::from(
        "# faddeev-stability 1\n# v̂± change under boundary perturbations against the boundary-transform bound\n# columns epsilon vhat_diff t_b_diff bound holds\n",
    );
    for &eps in epsilons {
        let pert = perturb(&data, eps, mu0, seed);
        let delta = pert.map(|node, hemi, j, h| h - data.values[data.slot(node, hemi, j)]);
        let tb = t_b_norm(&delta, mu0).map_err(PipelineError::Transform)?;
        let rec = reconstruct_data(cfg, &pert, None)?;
        let d = weighted_diff(&rec.result.vhat_plus, &base.result.vhat_plus, &data, mu0).max(weighted_diff(
            &rec.result.vhat_minus,
            &base.result.vhat_minus,
            &data,
            mu0,
        ));
        let bound = tb / (1.0 - cfg.solver.delta);
        let row = StabilityRow {
            epsilon: eps,
            vhat_diff: d,
            t_b_diff: tb,
            bound,
            holds: d <= bound,
        };
        let _ = writeln!(table, "{:.17e} {:.17e} {:.17e} {:.17e} {}", eps, d, tb, bound, row.holds);
        rows.push(row);
        t.lap(&format!("epsilon {eps}"));
    }
    let ratio = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if rows.len() >= 2 && a.vhat_diff > 0.0 => Some(b.vhat_diff / a.vhat_diff),
        _ => None,
    };
    let mut report = Report::new(cfg, Mode::Stability);
    report.stability = Some(StabilityReport { seed, rows, ratio });
    report.files.push(("stability.txt".into(), table));
    report.timings = t.0;
    Ok(report)
}

pub fn run_diagnostics(cfg: &RunConfig) -> Result<Report, PipelineError> {
    let mut t = Timer::new();
    let params = cfg.region.params()?;
    let data = synthesize(cfg)?;
    t.lap("synthesize");
    let constants = cfg.constants.table();
    let (c, _) = c_norm_for(cfg, &data, Some(&cfg.potential));
    let feasibility = check_feasibility(&cfg.solver, c, params.tau, params.rho, &constants);
    let d = &cfg.diagnostics;
    let he = high_energy_limit_check(
        &cfg.potential,
        d.high_energy_p,
        &d.high_energy_ladder,
        cfg.forward.iterations,
        &cfg.forward.quadrature,
    )
    .map_err(|e| PipelineError::Diagnostics(e.to_string()))?;
    let he_slope = log_log_slope(
        &he.iter().map(|x| x.0).collect::<Vec<_>>(),
        &he.iter().map(|x| x.1).collect::<Vec<_>>(),
    );
    t.lap("high energy");
    let solver = ForwardSolver::new(&cfg.potential, &cfg.forward.quadrature).map_err(PipelineError::Synthesize)?;
    let src = ModelSource {
        solver: &solver,
        iterations: cfg.forward.iterations,
    };
    let g = &data.momentum;
    let n = d.remainder_samples.min(g.len());
    let samples: Vec<Vec3> = (0..n).map(|i| g.nodes[i * g.len() / n.max(1)].p).collect();
    let rem = remainder_diagnostics(
        &src,
        &params,
        &LambdaGrid::new(&cfg.grid),
        &samples,
        cfg.grid.n_phi,
        cfg.solver.mu,
        cfg.solver.mu0,
    )
    .map_err(|e| PipelineError::Diagnostics(e.to_string()))?;
    t.lap("remainder");
    let h0 = h0_field(&data, &LambdaGrid::new(&cfg.grid));
    let h0_norm = field_norm(&h0, cfg.solver.mu0).map_err(PipelineError::Solve)?;
    let tb = t_b_norm(&data, cfg.solver.mu0).map_err(PipelineError::Transform)?;

    let mut table = String::from("# faddeev-high-energy 1\n# |v̂(p) − H(k,p)| on |Im k| = ρ\n# columns rho deviation\n");
    for (r, dev) in &he {
        let _ = writeln!(table, "{r:.17e} {dev:.17e}");
    }
    let mut report = Report::new(cfg, Mode::Diagnostics);
    report.diagnostics = Some(DiagnosticsReport {
        c_norm: c,
        feasibility,
        high_energy: he,
        high_energy_slope: he_slope,
        remainder: rem.into(),
        h0_norm,
        h0_bound: h0_bound(c, params.rho, cfg.solver.mu, &constants),
        t_b_norm: tb,
    });
    report.files.push(("high_energy.txt".into(), table));
    report.timings = t.0;
    Ok(report)
}

/// Runs the configured mode on a pool of `workers` threads.
pub fn run(cfg: &RunConfig) -> Result<Report, PipelineError> {
    cfg.validate()?;
    let go = || match cfg.mode {
        Mode::Synthesize => run_synthesize(cfg),
        Mode::Reconstruct => run_reconstruct(cfg),
        Mode::EndToEnd => run_end_to_end(cfg),
        Mode::Sweep => run_sweep(cfg, &cfg.sweep.rho_ladder),
        Mode::Stability => run_stability_probe(cfg, &cfg.stability.epsilons),
        Mode::Diagnostics => run_diagnostics(cfg),
    };
    match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?
            .install(go),
        None => go(),
    }
}

/// Writes `report.json`, every table, and `timing.txt` into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let write = |name: &str, contents: &str| {
        let p = dir.join(name);
        std::fs::write(&p, contents).map_err(|e| PipelineError::io(&p, e))
    };
    write("report.json", &report.to_json())?;
    for (name, contents) in &report.files {
        write(name, contents)?;
    }
    let mut timing = String::from("# stage seconds\n");
    for (stage, s) in &report.timings {
        let _ = writeln!(timing, "{stage}\t{s:.3}");
    }
    write("timing.txt", &timing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn tiny() -> RunConfig {
        RunConfig {
            grid: GridSpec {
                n_shells: 3,
                n_polar: 2,
                n_azimuth: 4,
                n_boundary: 8,
                n_rings: 3,
                n_ring_angles: 4,
                n_phi: 8,
                n_area_radial: 4,
                n_area_angular: 4,
                spatial_n: 2,
                spatial_half_width: 1.0,
                ..GridSpec::default()
            },
            region: RegionConfig {
                rho: 20.0,
                ..RegionConfig::default()
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn zero_potential_end_to_end() {
        let r = run_end_to_end(&tiny()).unwrap();
        let s = r.run.unwrap();
        assert_eq!(s.trace.diffs, vec![0.0]);
        let c = s.comparison.unwrap();
        assert_eq!(c.vhat_error(), 0.0);
        assert_eq!(c.spatial_error(), 0.0);
    }

    #[test]
    fn exit_codes() {
        let nc = PipelineError::Solve(SolverError::NotConverged(Box::default()));
        assert_eq!(nc.exit_code(), 2);
        assert_eq!(PipelineError::Solve(SolverError::FeasibilityViolated("x".into())).exit_code(), 3);
        let io = PipelineError::io(Path::new("/x"), std::io::Error::other("no"));
        assert_eq!(io.exit_code(), 4);
        assert_eq!(PipelineError::Config("x".into()).exit_code(), 1);
    }

    #[test]
    fn zero_ladder_has_undefined_slope() {
        let r = run_sweep(&tiny(), &[20.0, 40.0]).unwrap();
        let s = r.sweep.unwrap();
        assert_eq!(s.rungs.len(), 2);
        assert!(s.slope.is_none());
    }

    #[test]
    fn perturbation_is_seeded() {
        let data = synthesize(&tiny()).unwrap();
        let a = perturb(&data, 1e-3, 2.0, 7);
        let b = perturb(&data, 1e-3, 2.0, 7);
        assert_eq!(a.values, b.values);
        let z = perturb(&data, 0.0, 2.0, 7);
        assert_eq!(z.values, data.values);
    }
}
