//! Run configuration files (TOML).
//!
//! Every key is optional except `pde` and `[initial]`; unknown keys are
//! rejected with the full key path. See `book/src/configuration.md` for the
//! schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lieibvp::bases::{default_catalog, BaseFamily};
use lieibvp::geometry::{build_problem, sample_training_set, Domain, IbvpProblem, IcProfile, PdeKind, TrainingSet};
use lieibvp::reference::ReferenceConfig;
use lieibvp::solver::SolverConfig;
use lieibvp::symmetry::{LieTransform, Sampling, Seed};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Case name; defaults to `<pde>_<profile>`.
    #[serde(default)]
    pub name: Option<String>,
    pub pde: PdeKind,
    #[serde(default)]
    pub domain: Option<Domain>,
    pub initial: IcProfile,
    #[serde(default)]
    pub collocation: CollocationConfig,
    /// Families to draw from; the default catalog of the PDE when absent.
    #[serde(default)]
    pub catalog: Option<Vec<FamilySpec>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollocationConfig {
    /// Total number of boundary points `L`.
    pub points: usize,
    /// Fractions per boundary component, in problem order. Defaults to
    /// half on the initial line(s) and the rest on the edges.
    pub allocation: Option<Vec<f64>>,
    /// Optional positive weights per component.
    pub weights: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for CollocationConfig {
    fn default() -> Self {
        CollocationConfig { points: 3000, allocation: None, weights: None, seed: 0 }
    }
}

/// A catalog entry: either a built-in family, optionally with bound
/// overrides, or a fully custom chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: String,
    /// Seed of a custom family; requires `transforms`.
    #[serde(default)]
    pub seed: Option<Seed>,
    /// Innermost first.
    #[serde(default)]
    pub transforms: Option<Vec<LieTransform>>,
    /// Per-parameter overrides for a built-in family, in chain order.
    #[serde(default)]
    pub bounds: Option<Vec<BoundOverride>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundOverride {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub sampling: Option<Sampling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Artifact directory; relative paths resolve against the working
    /// directory. `--out` takes precedence.
    pub dir: Option<PathBuf>,
    /// Samples per boundary component in `ibc_fit.csv`.
    pub ibc_points: usize,
    /// Also write `plot.py`.
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, ibc_points: 201, plots: false }
    }
}

impl FamilySpec {
    pub fn build(&self, pde: PdeKind) -> Result<BaseFamily, CliError> {
        match (&self.seed, &self.transforms) {
            (Some(seed), Some(transforms)) => {
                if self.bounds.is_some() {
                    return Err(CliError::Config(format!("catalog family {}: give either transforms or bounds", self.family)));
                }
                Ok(BaseFamily::new(self.family.clone(), pde, *seed, transforms.clone()))
            }
            (None, None) => {
                let mut fam = BaseFamily::by_id(&self.family)
                    .ok_or_else(|| CliError::Config(format!("unknown catalog family {:?}", self.family)))?;
                if let Some(bounds) = &self.bounds {
                    if bounds.len() != fam.param_count() {
                        return Err(CliError::Config(format!(
                            "catalog family {}: {} bound overrides for {} parameters",
                            self.family,
                            bounds.len(),
                            fam.param_count()
                        )));
                    }
                    for (tr, b) in fam.transforms.iter_mut().zip(bounds) {
                        tr.lower = b.lower.unwrap_or(tr.lower);
                        tr.upper = b.upper.unwrap_or(tr.upper);
                        tr.sampling = b.sampling.unwrap_or(tr.sampling);
                    }
                }
                Ok(fam)
            }
            _ => Err(CliError::Config(format!("catalog family {}: custom families need both seed and transforms", self.family))),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at `{path}`: {}", e.into_inner().message().trim()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{}_{}", self.pde.name(), self.initial.name()))
    }

    pub fn domain(&self) -> Domain {
        self.domain.unwrap_or_else(|| Domain::default_for(self.pde))
    }

    /// Overrides both the collocation and the candidate seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.collocation.seed = seed;
        self.solver.seed = seed;
    }

    pub fn problem(&self) -> Result<IbvpProblem, CliError> {
        Ok(build_problem(self.pde, self.initial.clone(), self.domain())?)
    }

    pub fn training_set(&self, problem: &IbvpProblem) -> Result<TrainingSet, CliError> {
        let allocation = self.collocation.allocation.clone().unwrap_or_else(|| problem.default_allocation());
        let set = sample_training_set(problem, self.collocation.points, &allocation, self.collocation.seed)?;
        Ok(match &self.collocation.weights {
            Some(w) => set.with_component_weights(problem, w)?,
            None => set,
        })
    }

    /// The catalog without domain checks; see [`validate`](Self::validate).
    pub fn catalog_unchecked(&self) -> Result<Vec<BaseFamily>, CliError> {
        match &self.catalog {
            None => Ok(default_catalog(self.pde)),
            Some(specs) if specs.is_empty() => Err(CliError::Config("catalog is empty".into())),
            Some(specs) => specs.iter().map(|s| s.build(self.pde)).collect(),
        }
    }

    pub fn catalog(&self) -> Result<Vec<BaseFamily>, CliError> {
        let cat = self.catalog_unchecked()?;
        let domain = self.domain();
        for f in &cat {
            if f.pde != self.pde {
                return Err(CliError::Config(format!("catalog family {} belongs to the {} equation", f.id, f.pde.name())));
            }
            f.validate(&domain)?;
        }
        Ok(cat)
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<(), CliError> {
        let problem = self.problem()?;
        self.training_set(&problem)?;
        self.catalog()?;
        self.solver.validate()?;
        self.reference.validate()?;
        if self.output.ibc_points < 2 {
            return Err(CliError::Config("output.ibc_points must be at least 2".into()));
        }
        Ok(())
    }

    /// A complete configuration with every default spelled out.
    pub fn template(pde: PdeKind, initial: IcProfile) -> Self {
        let catalog = default_catalog(pde)
            .into_iter()
            .map(|f| FamilySpec {
                family: f.id.clone(),
                seed: None,
                transforms: None,
                bounds: Some(
                    f.transforms
                        .iter()
                        .map(|t| BoundOverride { lower: Some(t.lower), upper: Some(t.upper), sampling: Some(t.sampling) })
                        .collect(),
                ),
            })
            .collect();
        RunConfig {
            name: None,
            pde,
            domain: Some(Domain::default_for(pde)),
            initial,
            collocation: CollocationConfig::default(),
            catalog: Some(catalog),
            solver: SolverConfig::default(),
            reference: ReferenceConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// A list of run configurations.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub cases: Vec<SuiteCase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteCase {
    /// Path to a run configuration, relative to the suite file.
    pub config: PathBuf,
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let de = toml::de::Deserializer::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut suite: SuiteConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let p = e.path().to_string();
            CliError::Config(format!("{}: at `{p}`: {}", path.display(), e.into_inner().message().trim()))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for c in &mut suite.cases {
            if c.config.is_relative() {
                c.config = base.join(&c.config);
            }
        }
        Ok(suite)
    }
}
