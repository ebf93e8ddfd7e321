use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::geometry::{RegionParams, Vec3, DEFAULT_CONE_HALF_ANGLE};
use crate::grid::GridSpec;
use crate::scatter::{PotentialModel, QuadratureConfig};
use crate::solver::{ConstantsTable, SolverConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Synthesize,
    Reconstruct,
    #[default]
    EndToEnd,
    Sweep,
    Stability,
    Diagnostics,
}

impl std::str::FromStr for Mode {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "synthesize" => Mode::Synthesize,
            "reconstruct" => Mode::Reconstruct,
            "end-to-end" | "end_to_end" => Mode::EndToEnd,
            "sweep" => Mode::Sweep,
            "stability" => Mode::Stability,
            "diagnostics" => Mode::Diagnostics,
            other => return Err(PipelineError::Config(format!("unknown mode '{other}'"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub rho: f64,
    pub tau: f64,
    #[serde(default = "default_nu")]
    pub nu: Vec3,
    #[serde(default = "default_cone")]
    pub cone_half_angle: f64,
}

fn default_nu() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

fn default_cone() -> f64 {
    DEFAULT_CONE_HALF_ANGLE
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            rho: 54.598_150_033_144_236,
            tau: 0.1,
            nu: default_nu(),
            cone_half_angle: default_cone(),
        }
    }
}

impl RegionConfig {
    pub fn params(&self) -> Result<RegionParams, PipelineError> {
        let p = RegionParams {
            rho: self.rho,
            tau: self.tau,
            nu: self.nu,
            cone_half_angle: self.cone_half_angle,
        };
        p.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardConfig {
    /// Neumann steps beyond the Born term.
    pub iterations: usize,
    pub quadrature: QuadratureConfig,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self {
            iterations: 1,
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// Individual constants; any value given makes the table binding.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstantOverrides {
    pub a_mu: Option<f64>,
    pub b1: Option<f64>,
    pub b2: Option<f64>,
    pub b3: Option<f64>,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    pub n3: Option<f64>,
}

impl ConstantOverrides {
    pub fn table(&self) -> ConstantsTable {
        let mut t = ConstantsTable::default();
        let mut any = false;
        for (slot, v) in [
            (&mut t.a_mu, self.a_mu),
            (&mut t.b1, self.b1),
            (&mut t.b2, self.b2),
            (&mut t.b3, self.b3),
            (&mut t.n1, self.n1),
            (&mut t.n2, self.n2),
            (&mut t.n3, self.n3),
        ] {
            if let Some(v) = v {
                *slot = v;
                any = true;
            }
        }
        t.placeholder = !any;
        t
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub rho_ladder: Vec<f64>,
    /// Shells per unit of ball radius; the grid's `n_shells` is the floor.
    pub shells_per_radius: Option<f64>,
    /// Bracket nodes per unit of ball radius; the grid's `n_phi` is the floor.
    pub phi_per_radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityConfig {
    pub epsilons: Vec<f64>,
    /// Required in stability mode.
    pub seed: Option<u64>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![1e-3, 1e-2],
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// `ρ` values of the high-energy check.
    pub high_energy_ladder: Vec<f64>,
    /// Momentum of the high-energy check.
    pub high_energy_p: Vec3,
    /// Momenta at which the cutoff remainder is evaluated.
    pub remainder_samples: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            high_energy_ladder: vec![20.0, 40.0, 80.0, 160.0],
            high_energy_p: Vec3::new(0.6, 0.3, 0.5),
            remainder_samples: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    pub out_dir: PathBuf,
    /// Thread count; all outputs are independent of it.
    pub workers: Option<usize>,
    /// Boundary data read in reconstruct mode.
    pub data: Option<PathBuf>,
    /// Also write the completed field (large).
    pub write_field: bool,
    pub potential: PotentialModel,
    pub region: RegionConfig,
    pub grid: GridSpec,
    pub forward: ForwardConfig,
    pub solver: SolverConfig,
    pub constants: ConstantOverrides,
    pub sweep: SweepConfig,
    pub stability: StabilityConfig,
    pub diagnostics: DiagnosticsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::default(),
            out_dir: PathBuf::from("out"),
            workers: None,
            data: None,
            write_field: false,
            potential: PotentialModel::zero(),
            region: RegionConfig::default(),
            grid: GridSpec::default(),
            forward: ForwardConfig::default(),
            solver: SolverConfig::default(),
            constants: ConstantOverrides::default(),
            sweep: SweepConfig::default(),
            stability: StabilityConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |e: &dyn std::fmt::Display| PipelineError::Config(e.to_string());
        self.region.params()?;
        self.grid.validate().map_err(|e| cfg(&e))?;
        self.forward.quadrature.validate().map_err(|e| cfg(&e))?;
        self.potential.validate().map_err(|e| cfg(&e))?;
        self.solver.validate().map_err(|e| cfg(&e))?;
        self.constants.table().validate().map_err(|e| cfg(&e))?;
        if self.workers == Some(0) {
            return Err(PipelineError::Config("workers must be positive".into()));
        }
        match self.mode {
            Mode::Reconstruct if self.data.is_none() => {
                return Err(PipelineError::Config("reconstruct mode needs 'data'".into()));
            }
            Mode::Sweep => {
                let l = &self.sweep.rho_ladder;
                if l.is_empty() || l.windows(2).any(|w| w[1] <= w[0]) || l[0] <= 0.0 {
                    return Err(PipelineError::Config("rho_ladder must be positive and increasing".into()));
                }
            }
            Mode::Stability => {
                if self.stability.seed.is_none() {
                    return Err(PipelineError::Config("stability mode needs a seed".into()));
                }
                if self.stability.epsilons.iter().any(|&e| !(e >= 0.0)) {
                    return Err(PipelineError::Config("epsilons must be non-negative".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Copy with `ρ` replaced and resolution scaled by the sweep rules.
    pub fn at_rho(&self, rho: f64) -> Self {
        let mut c = self.clone();
        c.region.rho = rho;
        let ball = 2.0 * c.region.tau * rho;
        if let Some(k) = self.sweep.shells_per_radius {
            c.grid.n_shells = self.grid.n_shells.max((k * ball).ceil() as usize + 2);
        }
        if let Some(k) = self.sweep.phi_per_radius {
            let n = ((k * ball).ceil() as usize).next_multiple_of(2);
            c.grid.n_phi = self.grid.n_phi.max(n);
        }
        c
    }
}
