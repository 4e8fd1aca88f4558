//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use nlddm_core::constraints::ConstraintMode;
use nlddm_core::decomposition::CollarPolicy;
use nlddm_core::field::{Rect, ScalarField};
use nlddm_core::kernel::{KernelFamily, KernelSpec, Truncation};
use nlddm_core::solver::{SolverMethod, SOLVE_TOLERANCE};
use nlddm_core::Point;
use serde::{Deserialize, Serialize};

use crate::error::{RunError, RunResult};

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub load: LoadConfig,
    #[serde(default)]
    pub decomposition: DecompositionConfig,
    #[serde(default)]
    pub constraints: ConstraintConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "one")]
    pub side_length: f64,
    #[serde(default)]
    pub h: Option<f64>,
    /// Mesh in the plain-text format; replaces the generated frame mesh.
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Constant,
    Gaussian,
    FractionalTruncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationName {
    #[default]
    BarycenterPair,
    Pointwise,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: FamilyName,
    pub delta: f64,
    #[serde(default)]
    pub s: Option<f64>,
    /// Omitted: 1, or the calibrated `4 / (π δ⁴)` when `calibrated` is set.
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub calibrated: bool,
    #[serde(default)]
    pub truncation: TruncationName,
    #[serde(default = "default_quad")]
    pub quad_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    Linear { a: f64, b: f64, c: f64 },
    Sinusoidal { amplitude: f64 },
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Constant { value: 0.0 }
    }
}

impl From<FieldSpec> for ScalarField {
    fn from(s: FieldSpec) -> Self {
        match s {
            FieldSpec::Constant { value } => ScalarField::Constant(value),
            FieldSpec::Linear { a, b, c } => ScalarField::Linear { a, b, c },
            FieldSpec::Sinusoidal { amplitude } => ScalarField::Sinusoidal { amplitude },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannConfig {
    pub flux: FieldSpec,
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl NeumannConfig {
    pub fn region(&self) -> Rect {
        Rect { min: Point::new(self.min[0], self.min[1]), max: Point::new(self.max[0], self.max[1]) }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    #[serde(default)]
    pub f: FieldSpec,
    #[serde(default)]
    pub g: FieldSpec,
    #[serde(default)]
    pub neumann: Option<NeumannConfig>,
    #[serde(default)]
    pub reaction: Option<FieldSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CollarName {
    #[default]
    Strict,
    Extended,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    #[serde(default = "one_usize")]
    pub bx: usize,
    #[serde(default = "one_usize")]
    pub by: usize,
    /// CSV `element,subdomain` table; replaces the block partition.
    #[serde(default)]
    pub partition_file: Option<PathBuf>,
    #[serde(default)]
    pub collar: CollarName,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self { bx: 1, by: 1, partition_file: None, collar: CollarName::Strict }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    NonRedundant,
    Redundant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    #[serde(default)]
    pub mode: ModeName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Direct,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub method: MethodName,
    /// Largest accepted relative residual of any solve.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { method: MethodName::Direct, tolerance: SOLVE_TOLERANCE }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Mesh,
    Partition,
    Decomposition,
    ASingle,
    BSingle,
    SubdomainMatrices,
    Constraints,
    Kkt,
    Solution,
    Report,
}

impl Artifact {
    pub const ALL: [Artifact; 10] = [
        Artifact::Mesh,
        Artifact::Partition,
        Artifact::Decomposition,
        Artifact::ASingle,
        Artifact::BSingle,
        Artifact::SubdomainMatrices,
        Artifact::Constraints,
        Artifact::Kkt,
        Artifact::Solution,
        Artifact::Report,
    ];

    /// Whether the artifact needs the solve.
    pub fn needs_solution(self) -> bool {
        matches!(self, Artifact::Solution | Artifact::Report)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    #[serde(default)]
    pub artifacts: Vec<Artifact>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_dir(), artifacts: Vec::new() }
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn default_quad() -> usize {
    nlddm_core::assembly::DEFAULT_QUAD_ORDER
}

fn default_tolerance() -> f64 {
    SOLVE_TOLERANCE
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_toml(text: &str) -> RunResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> RunResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.mesh.file.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.decomposition.partition_file.as_mut() {
            resolve(p);
        }
        resolve(&mut cfg.outputs.directory);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> RunResult<()> {
        let bad = |m: String| Err(RunError::Config(m));
        let k = &self.kernel;
        if !(k.delta > 0.0 && k.delta.is_finite()) {
            return bad(format!("kernel.delta = {} must be positive", k.delta));
        }
        if self.mesh.file.is_none() {
            match self.mesh.h {
                Some(h) if h > 0.0 && h.is_finite() => {}
                Some(h) => return bad(format!("mesh.h = {h} must be positive")),
                None => return bad("mesh.h is required without mesh.file".into()),
            }
            if !(self.mesh.side_length > 0.0) {
                return bad(format!("mesh.side_length = {} must be positive", self.mesh.side_length));
            }
        }
        if k.family == FamilyName::FractionalTruncated && k.s.is_none() {
            return bad("kernel.s is required for the fractional family".into());
        }
        if k.calibrated && k.scale.is_some() {
            return bad("kernel.scale and kernel.calibrated are exclusive".into());
        }
        if k.calibrated && k.family != FamilyName::Constant {
            return bad("kernel.calibrated applies to the constant family only".into());
        }
        if k.quad_order == 0 || k.quad_order > 20 {
            return bad(format!("kernel.quad_order = {} not in 1..=20", k.quad_order));
        }
        let d = &self.decomposition;
        if d.partition_file.is_none() && (d.bx == 0 || d.by == 0) {
            return bad("decomposition.bx and decomposition.by must be at least 1".into());
        }
        if !(self.solver.tolerance > 0.0) {
            return bad(format!("solver.tolerance = {} must be positive", self.solver.tolerance));
        }
        if let Some(n) = &self.load.neumann {
            if n.min[0] > n.max[0] || n.min[1] > n.max[1] {
                return bad("load.neumann region has min above max".into());
            }
        }
        self.kernel_spec().map(|_| ())
    }

    pub fn kernel_spec(&self) -> RunResult<KernelSpec> {
        let k = &self.kernel;
        let truncation = match k.truncation {
            TruncationName::BarycenterPair => Truncation::BarycenterPair,
            TruncationName::Pointwise => Truncation::Pointwise,
        };
        let family = match k.family {
            FamilyName::Constant => KernelFamily::Constant,
            FamilyName::Gaussian => KernelFamily::Gaussian,
            FamilyName::FractionalTruncated => KernelFamily::FractionalTruncated { s: k.s.unwrap_or(f64::NAN) },
        };
        let spec = if k.calibrated {
            KernelSpec::calibrated_constant(k.delta, truncation)
        } else {
            KernelSpec::new(family, k.delta, k.scale.unwrap_or(1.0), truncation)
        };
        spec.map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn collar_policy(&self) -> CollarPolicy {
        match self.decomposition.collar {
            CollarName::Strict => CollarPolicy::Strict,
            CollarName::Extended => CollarPolicy::Extended,
        }
    }

    pub fn constraint_mode(&self) -> ConstraintMode {
        match self.constraints.mode {
            ModeName::NonRedundant => ConstraintMode::NonRedundant,
            ModeName::Redundant => ConstraintMode::Redundant,
        }
    }

    pub fn solver_method(&self) -> SolverMethod {
        match self.solver.method {
            MethodName::Direct => SolverMethod::Direct,
            MethodName::Cg => SolverMethod::ConjugateGradient,
        }
    }

    /// Standard desk case: unit square, `h = 1/8`, `δ = 1/4`.
    pub fn desk(family: FamilyName, bx: usize, by: usize) -> Self {
        RunConfig {
            mesh: MeshConfig { side_length: 1.0, h: Some(0.125), file: None },
            kernel: KernelConfig {
                family,
                delta: 0.25,
                s: None,
                scale: None,
                calibrated: false,
                truncation: TruncationName::BarycenterPair,
                quad_order: default_quad(),
            },
            load: LoadConfig {
                f: FieldSpec::Sinusoidal { amplitude: 1.0 },
                g: FieldSpec::Linear { a: 0.5, b: -0.25, c: 1.0 },
                neumann: None,
                reaction: None,
            },
            decomposition: DecompositionConfig { bx, by, ..Default::default() },
            constraints: ConstraintConfig::default(),
            solver: SolverConfig::default(),
            outputs: OutputConfig::default(),
        }
    }
}
