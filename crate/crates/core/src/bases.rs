//! Base-solution families: a seed plus a parametrized transform chain, with
//! per-parameter bounds and sampling rules.
//!
//! Parameters are ordered like the chain, innermost first. The default
//! catalogs are
//!
//! | id | chain | parameters |
//! |----|-------|------------|
//! | `heat_sine_mode` | `T4 ∘ T1 ∘ sin(x)e^{-t}` | phase, log-scale |
//! | `heat_blob` | `T1 ∘ T6 ∘ 1` | width, center |
//! | `heat_modulated_blob` | `T1 ∘ T6 ∘ T4 ∘ T1 ∘ sin(x)e^{-t}` | phase, log-scale, width, center |
//! | `wave_standing` | `T2 ∘ T1 ∘ sin(x)cos(t)` | phase, log-frequency |
//! | `wave_blob_pair` | `T1 ∘ T2 ∘ (e^{-(x-t)²}+e^{-(x+t)²})` | log-scale, center |

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConditionKind, Domain, PdeKind, TrainingSet};
use crate::symmetry::{
    eval_composed, eval_composed_value, render_composed, LieTransform, Sampling, Seed, TransformChain, TransformKind,
};

/// Which quantity of a base to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Value,
    DtValue,
    DxValue,
}

impl From<ConditionKind> for Which {
    fn from(k: ConditionKind) -> Self {
        match k {
            ConditionKind::Value => Which::Value,
            ConditionKind::TimeDerivative => Which::DtValue,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseFamily {
    pub id: String,
    pub pde: PdeKind,
    pub seed: Seed,
    /// Innermost first; each transform contributes one parameter.
    pub transforms: Vec<LieTransform>,
}

pub const HEAT_SINE_MODE: &str = "heat_sine_mode";
pub const HEAT_BLOB: &str = "heat_blob";
pub const HEAT_MODULATED_BLOB: &str = "heat_modulated_blob";
pub const WAVE_STANDING: &str = "wave_standing";
pub const WAVE_BLOB_PAIR: &str = "wave_blob_pair";

fn phase(kind: TransformKind) -> LieTransform {
    use std::f64::consts::PI;
    LieTransform::uniform(kind, -PI, PI)
}

/// Heat `T4` parameter `-ln k` for frequencies `k ∈ [0.5, 60]`. Uniform in
/// the parameter is log-uniform in the frequency.
fn heat_log_scale() -> LieTransform {
    LieTransform::uniform(TransformKind::HeatT4, -(60f64.ln()), 2f64.ln())
}

fn blob_width() -> LieTransform {
    LieTransform::log_uniform(TransformKind::HeatT6, 1.0, 400.0)
}

fn blob_center() -> LieTransform {
    LieTransform::uniform(TransformKind::HeatT1, -0.5, 1.5)
}

impl BaseFamily {
    pub fn new(id: impl Into<String>, pde: PdeKind, seed: Seed, transforms: Vec<LieTransform>) -> Self {
        BaseFamily { id: id.into(), pde, seed, transforms }
    }

    /// Phase-shifted, rescaled Fourier mode `sin(kx − φ) e^{−k²t}`.
    pub fn heat_sine_mode() -> Self {
        Self::new(HEAT_SINE_MODE, PdeKind::Heat, Seed::HeatMode, vec![phase(TransformKind::HeatT1), heat_log_scale()])
    }

    /// Diffusing Gaussian blob with variable center and width.
    pub fn heat_blob() -> Self {
        Self::new(HEAT_BLOB, PdeKind::Heat, Seed::Constant, vec![blob_width(), blob_center()])
    }

    /// Gaussian blob modulated by a shifted, rescaled sine.
    pub fn heat_modulated_blob() -> Self {
        Self::new(
            HEAT_MODULATED_BLOB,
            PdeKind::Heat,
            Seed::HeatMode,
            vec![phase(TransformKind::HeatT1), heat_log_scale(), blob_width(), blob_center()],
        )
    }

    /// `sin(ωx − φ) cos(ωt)` with `ω ∈ [0.5, 60]`.
    pub fn wave_standing() -> Self {
        Self::new(
            WAVE_STANDING,
            PdeKind::Wave,
            Seed::StandingWave,
            vec![phase(TransformKind::WaveT1), LieTransform::uniform(TransformKind::WaveT2, 0.5f64.ln(), 60f64.ln())],
        )
    }

    /// Counter-propagating Gaussian pair, scale `∈ [0.2, 5]`, center `∈ [−1, 2]`.
    pub fn wave_blob_pair() -> Self {
        Self::new(
            WAVE_BLOB_PAIR,
            PdeKind::Wave,
            Seed::BlobPair,
            vec![
                LieTransform::uniform(TransformKind::WaveT2, 0.2f64.ln(), 5f64.ln()),
                LieTransform::uniform(TransformKind::WaveT1, -1.0, 2.0),
            ],
        )
    }

    /// Looks up a default family by id.
    pub fn by_id(id: &str) -> Option<Self> {
        match id {
            HEAT_SINE_MODE => Some(Self::heat_sine_mode()),
            HEAT_BLOB => Some(Self::heat_blob()),
            HEAT_MODULATED_BLOB => Some(Self::heat_modulated_blob()),
            WAVE_STANDING => Some(Self::wave_standing()),
            WAVE_BLOB_PAIR => Some(Self::wave_blob_pair()),
            _ => None,
        }
    }

    pub fn param_count(&self) -> usize {
        self.transforms.len()
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.transforms.iter().map(|t| t.lower).collect()
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        self.transforms.iter().map(|t| t.upper).collect()
    }

    /// Structural and bound checks, including freedom from singularities
    /// on `domain`.
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if !self.seed.solves(self.pde) {
            return Err(Error::Config(format!("family {}: seed {} does not solve the {} equation", self.id, self.seed.name(), self.pde.name())));
        }
        for tr in &self.transforms {
            if tr.kind.pde() != self.pde {
                return Err(Error::Config(format!("family {}: transform {} is not a {} symmetry", self.id, tr.kind.name(), self.pde.name())));
            }
            tr.validate_on(domain).map_err(|e| Error::Config(format!("family {}: {e}", self.id)))?;
        }
        Ok(())
    }

    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Parameter(format!(
                "family {} takes {} parameters, got {}",
                self.id,
                self.param_count(),
                params.len()
            )));
        }
        for (tr, &p) in self.transforms.iter().zip(params) {
            tr.check(p).map_err(|e| Error::Parameter(format!("family {}: {e}", self.id)))?;
        }
        Ok(())
    }

    pub fn chain(&self, params: &[f64]) -> Result<TransformChain> {
        TransformChain::new(self.seed, self.transforms.clone(), params.to_vec())
    }

    #[inline]
    pub fn eval_point(&self, params: &[f64], x: f64, t: f64, which: Which) -> Result<f64> {
        match which {
            Which::Value => eval_composed_value(self.seed, &self.transforms, params, x, t),
            Which::DtValue => eval_composed(self.seed, &self.transforms, params, x, t).map(|j| j.dt),
            Which::DxValue => eval_composed(self.seed, &self.transforms, params, x, t).map(|j| j.dx),
        }
    }

    /// The family at `params` evaluated at every point.
    pub fn eval_batch(&self, params: &[f64], points: &[[f64; 2]], which: Which) -> Result<Vec<f64>> {
        self.check_params(params)?;
        points.iter().map(|&[x, t]| self.eval_point(params, x, t, which)).collect()
    }

    /// Design-matrix column over a training set: each row uses its own
    /// condition kind and row scale.
    pub fn design_column(&self, params: &[f64], set: &TrainingSet) -> Result<Vec<f64>> {
        self.check_params(params)?;
        set.points
            .iter()
            .zip(&set.kinds)
            .zip(&set.row_scale)
            .map(|((&[x, t], &kind), &s)| self.eval_point(params, x, t, kind.into()).map(|v| v * s))
            .collect()
    }

    /// `count` parameter vectors drawn within the bounds.
    pub fn sample_params<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::Config("need at least one parameter sample".into()));
        }
        for tr in &self.transforms {
            tr.validate().map_err(|e| Error::Config(format!("family {}: {e}", self.id)))?;
        }
        Ok((0..count).map(|_| self.transforms.iter().map(|tr| draw(tr, rng)).collect()).collect())
    }

    pub fn render(&self, params: &[f64]) -> String {
        render_composed(self.seed, &self.transforms, params)
    }

    /// Transform names, innermost first.
    pub fn chain_ids(&self) -> Vec<&'static str> {
        self.transforms.iter().map(|t| t.kind.name()).collect()
    }
}

fn draw<R: Rng + ?Sized>(tr: &LieTransform, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let v = match tr.sampling {
        Sampling::Uniform => tr.lower + u * (tr.upper - tr.lower),
        Sampling::LogUniform => {
            let (a, b) = (tr.lower.ln(), tr.upper.ln());
            (a + u * (b - a)).exp()
        }
    };
    v.clamp(tr.lower, tr.upper)
}

/// The default families for a PDE.
pub fn default_catalog(pde: PdeKind) -> Vec<BaseFamily> {
    match pde {
        PdeKind::Heat => vec![BaseFamily::heat_sine_mode(), BaseFamily::heat_blob(), BaseFamily::heat_modulated_blob()],
        PdeKind::Wave => vec![BaseFamily::wave_standing(), BaseFamily::wave_blob_pair()],
    }
}

/// A family with fixed parameters, i.e. one member of the active set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundBase {
    pub family: BaseFamily,
    pub params: Vec<f64>,
}

impl BoundBase {
    pub fn new(family: BaseFamily, params: Vec<f64>) -> Result<Self> {
        family.check_params(&params)?;
        Ok(BoundBase { family, params })
    }

    pub fn eval(&self, x: f64, t: f64, which: Which) -> Result<f64> {
        self.family.eval_point(&self.params, x, t, which)
    }

    pub fn design_column(&self, set: &TrainingSet) -> Result<Vec<f64>> {
        self.family.design_column(&self.params, set)
    }

    pub fn render(&self) -> String {
        self.family.render(&self.params)
    }
}
