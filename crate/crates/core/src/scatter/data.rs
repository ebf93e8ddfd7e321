use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{ForwardSolver, PotentialModel, QuadratureConfig, ScatterError};
use crate::geometry::{
    boundary_radius, from_chart, make_frame, Hemisphere, OmegaPoint, RegionParams, Vec3,
};
use crate::grid::{GridSpec, MomentumGrid};

const MAGIC: &str = "# faddeev-scattering-data 1";

/// Amplitude samples on the two boundary circles over every momentum node.
///
/// Circle samples sit at chart angles `α_j = 2πj/M`: on the `+` side
/// `λ = R e^{iα_j}`, on the `−` side `λ = 1/(R e^{iα_j})`, where `R` is the
/// radius of `T⁺_{ρ/|p|}`.
#[derive(Clone, Debug)]
pub struct ScatteringData {
    pub params: RegionParams,
    pub grid: GridSpec,
    pub momentum: Arc<MomentumGrid>,
    /// Neumann steps used to synthesise the data (informational).
    pub iterations: usize,
    /// Layout `[node][hemisphere][angle]`.
    pub values: Vec<Complex64>,
    /// Forward quadrature error estimate per sample.
    pub errors: Vec<f64>,
}

impl ScatteringData {
    pub fn zeros(params: &RegionParams, grid: &GridSpec) -> Result<Self, ScatterError> {
        let momentum = Arc::new(MomentumGrid::new(params, grid)?);
        let n = momentum.len() * 2 * grid.n_boundary;
        Ok(Self {
            params: *params,
            grid: grid.clone(),
            momentum,
            iterations: 0,
            values: vec![Complex64::new(0.0, 0.0); n],
            errors: vec![0.0; n],
        })
    }

    pub fn n_boundary(&self) -> usize {
        self.grid.n_boundary
    }

    pub fn slot(&self, node: usize, hemi: Hemisphere, j: usize) -> usize {
        (node * 2 + hemi.index()) * self.grid.n_boundary + j
    }

    /// Samples of one circle in angle order.
    pub fn circle(&self, node: usize, hemi: Hemisphere) -> &[Complex64] {
        let s = self.slot(node, hemi, 0);
        &self.values[s..s + self.grid.n_boundary]
    }

    /// Chart radius of the boundary circle over momentum node `node`.
    pub fn circle_radius(&self, node: usize) -> f64 {
        boundary_radius(self.params.rho / self.momentum.nodes[node].p.norm())
    }

    pub fn chart_angle(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / self.grid.n_boundary as f64
    }

    pub fn boundary_lambda(&self, node: usize, hemi: Hemisphere, j: usize) -> Complex64 {
        let u = Complex64::from_polar(self.circle_radius(node), self.chart_angle(j));
        from_chart(hemi, u)
    }

    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    /// Same layout with every value replaced by `f(node, hemi, j, value)`.
    pub fn map(&self, mut f: impl FnMut(usize, Hemisphere, usize, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for node in 0..self.momentum.len() {
            for hemi in Hemisphere::BOTH {
                for j in 0..self.grid.n_boundary {
                    let s = self.slot(node, hemi, j);
                    out.values[s] = f(node, hemi, j, self.values[s]);
                }
            }
        }
        out
    }

    /// Columnar text: a self-describing header, then one row per sample.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        let _ = writeln!(out, "# params {}", serde_json::to_string(&self.params).unwrap());
        let _ = writeln!(out, "# grid {}", serde_json::to_string(&self.grid).unwrap());
        let _ = writeln!(out, "# iterations {}", self.iterations);
        out.push_str("# columns p_x p_y p_z re_lambda im_lambda hemisphere re_H im_H quad_err\n");
        for node in 0..self.momentum.len() {
            let p = self.momentum.nodes[node].p;
            for hemi in Hemisphere::BOTH {
                for j in 0..self.grid.n_boundary {
                    let lam = self.boundary_lambda(node, hemi, j);
                    let s = self.slot(node, hemi, j);
                    let h = self.values[s];
                    let _ = writeln!(
                        out,
                        "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {} {:.16e} {:.16e} {:.16e}",
                        p.x,
                        p.y,
                        p.z,
                        lam.re,
                        lam.im,
                        hemi.sign(),
                        h.re,
                        h.im,
                        self.errors[s]
                    );
                }
            }
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self, ScatterError> {
        let fmt = |m: String| ScatterError::Format(m);
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(fmt("missing header line".into()));
        }
        let mut header = |key: &str| -> Result<String, ScatterError> {
            let l = lines.next().ok_or_else(|| fmt(format!("missing '{key}' header")))?;
            l.strip_prefix(&format!("# {key} "))
                .map(str::to_string)
                .ok_or_else(|| fmt(format!("expected '{key}' header, found '{l}'")))
        };
        let params: RegionParams =
            serde_json::from_str(&header("params")?).map_err(|e| fmt(e.to_string()))?;
        let grid: GridSpec = serde_json::from_str(&header("grid")?).map_err(|e| fmt(e.to_string()))?;
        let iterations: usize = header("iterations")?
            .trim()
            .parse()
            .map_err(|_| fmt("bad iterations".into()))?;
        header("columns")?;
        params.validate()?;
        let mut data = Self::zeros(&params, &grid)?;
        data.iterations = iterations;
        let mut count = 0usize;
        let total = data.values.len();
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if count >= total {
                return Err(fmt("more rows than the grid holds".into()));
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 9 {
                return Err(fmt(format!("row {row}: expected 9 columns")));
            }
            let num = |i: usize| -> Result<f64, ScatterError> {
                f[i].parse::<f64>().map_err(|_| fmt(format!("row {row}: bad number '{}'", f[i])))
            };
            let node = count / (2 * grid.n_boundary);
            let hemi = if (count / grid.n_boundary) % 2 == 0 {
                Hemisphere::Plus
            } else {
                Hemisphere::Minus
            };
            let j = count % grid.n_boundary;
            let p = Vec3::new(num(0)?, num(1)?, num(2)?);
            let lam = Complex64::new(num(3)?, num(4)?);
            let want_p = data.momentum.nodes[node].p;
            let want_l = data.boundary_lambda(node, hemi, j);
            if (p - want_p).norm() > 1e-12 * (1.0 + want_p.norm())
                || (lam - want_l).norm() > 1e-12 * want_l.norm()
                || f[5] != hemi.sign().to_string()
            {
                return Err(fmt(format!("row {row}: sample position does not match the grid")));
            }
            data.values[count] = Complex64::new(num(6)?, num(7)?);
            data.errors[count] = num(8)?;
            count += 1;
        }
        if count != total {
            return Err(fmt(format!("expected {total} rows, found {count}")));
        }
        Ok(data)
    }

    pub fn write(&self, path: &Path) -> Result<(), ScatterError> {
        std::fs::write(path, self.to_table())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, ScatterError> {
        Self::from_table(&std::fs::read_to_string(path)?)
    }
}

/// Evaluates `H` at every boundary sample of the grid.
pub fn sample_boundary(
    model: &PotentialModel,
    params: &RegionParams,
    grid: &GridSpec,
    iterations: usize,
    quad: &QuadratureConfig,
) -> Result<ScatteringData, ScatterError> {
    let mut data = ScatteringData::zeros(params, grid)?;
    data.iterations = iterations;
    let solver = ForwardSolver::new(model, quad)?;
    let m = grid.n_boundary;
    let per_node: Vec<Vec<(Complex64, f64)>> = (0..data.momentum.len())
        .into_par_iter()
        .map(|node| {
            let frame = &data.momentum.nodes[node].frame;
            let mut out = Vec::with_capacity(2 * m);
            for hemi in Hemisphere::BOTH {
                for j in 0..m {
                    let lam = data.boundary_lambda(node, hemi, j);
                    let pt = OmegaPoint::from_lambda(lam, frame)?;
                    let v = solver.amplitude(&pt, iterations)?;
                    out.push((v.value, v.error));
                }
            }
            Ok(out)
        })
        .collect::<Vec<Result<_, ScatterError>>>()
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| ScatterError::AtNode {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;
    for (node, vals) in per_node.into_iter().enumerate() {
        for (i, (v, e)) in vals.into_iter().enumerate() {
            let s = node * 2 * m + i;
            data.values[s] = v;
            data.errors[s] = e;
        }
    }
    Ok(data)
}

/// `|v̂(p) − H(k, p)|` at the point of `|Im k| = ρ` with real `λ ∈ (0, 1)`,
/// for each `ρ` in the list. The axis is `(0, 0, 1)`.
pub fn high_energy_limit_check(
    model: &PotentialModel,
    p: Vec3,
    rho_list: &[f64],
    iterations: usize,
    quad: &QuadratureConfig,
) -> Result<Vec<(f64, f64)>, ScatterError> {
    let frame = make_frame(p, Vec3::new(0.0, 0.0, 1.0), crate::geometry::DEFAULT_CONE_HALF_ANGLE)?;
    let solver = ForwardSolver::new(model, quad)?;
    let vh = model.vhat(p);
    rho_list
        .iter()
        .map(|&rho| {
            let r = rho / frame.p_norm;
            if !(r > 0.5) {
                return Err(ScatterError::InvalidModel(format!(
                    "rho = {rho} is too small for |p| = {}",
                    frame.p_norm
                )));
            }
            let lam = Complex64::new(boundary_radius(r), 0.0);
            let pt = OmegaPoint::from_lambda(lam, &frame)?;
            let h = solver.amplitude(&pt, iterations)?.value;
            Ok((rho, (vh - h).norm()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_grid() -> GridSpec {
        GridSpec {
            n_shells: 3,
            n_polar: 2,
            n_azimuth: 4,
            n_boundary: 8,
            ..GridSpec::default()
        }
    }

    #[test]
    fn born_data_is_constant_on_circles() {
        let params = RegionParams::new(20.0, 0.1).unwrap();
        let m = PotentialModel::gaussian(0.5, 0.7);
        let d = sample_boundary(&m, &params, &tiny_grid(), 0, &QuadratureConfig::default()).unwrap();
        for node in 0..d.momentum.len() {
            let want = m.vhat(d.momentum.nodes[node].p);
            for hemi in Hemisphere::BOTH {
                assert!(d.circle(node, hemi).iter().all(|&v| v == want));
            }
            let anti = d.momentum.antipode(node);
            assert!((d.values[d.slot(anti, Hemisphere::Plus, 0)] - want.conj()).norm() < 1e-17);
        }
    }

    #[test]
    fn table_round_trip_is_exact() {
        let params = RegionParams::new(20.0, 0.1).unwrap();
        let m = PotentialModel::gaussian(0.5, 0.7);
        let d = sample_boundary(&m, &params, &tiny_grid(), 1, &QuadratureConfig::default()).unwrap();
        let back = ScatteringData::from_table(&d.to_table()).unwrap();
        assert_eq!(back.values, d.values);
        assert_eq!(back.errors, d.errors);
        assert_eq!(back.params, d.params);
        assert_eq!(back.grid, d.grid);
        assert_eq!(back.to_table(), d.to_table());
    }

    #[test]
    fn corrupted_table_rejected() {
        let params = RegionParams::new(20.0, 0.1).unwrap();
        let d = ScatteringData::zeros(&params, &tiny_grid()).unwrap();
        let t = d.to_table();
        let cut: String = t.lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(ScatteringData::from_table(&cut).is_err());
        assert!(ScatteringData::from_table("hello").is_err());
    }

    #[test]
    fn high_energy_zero_model() {
        let r = high_energy_limit_check(
            &PotentialModel::zero(),
            Vec3::new(0.5, 0.2, 0.1),
            &[10.0, 20.0],
            1,
            &QuadratureConfig::default(),
        )
        .unwrap();
        assert!(r.iter().all(|&(_, d)| d == 0.0));
    }
}
