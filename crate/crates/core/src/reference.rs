//! Truncated sine-series solutions of the Dirichlet heat and wave problems,
//! used as ground truth.
//!
//! Heat: `u = w(x) + Σ A_k sin(ω_k ξ) e^{−ω_k² τ}` with the linear lift `w`
//! through the edge values. Wave: `u = Σ [A_k cos(ω_k τ) + B_k/ω_k sin(ω_k τ)] sin(ω_k ξ)`.
//! Here `ξ = x − x_min`, `τ = t − t_min` and `ω_k = kπ/width`.
//!
//! Coefficients come from the discrete sine transform of the initial data
//! at the nodes `ξ_m = width·m/(N+1)`, `m = 1..N`, so a single sampled
//! mode is reproduced exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{ComponentId, Domain, IbvpProblem, PdeKind, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub modes: usize,
    /// Evaluation grid over the closed domain.
    pub grid_nx: usize,
    pub grid_nt: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig { modes: 256, grid_nx: 100, grid_nt: 100 }
    }
}

impl ReferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 || self.grid_nx < 2 || self.grid_nt < 2 {
            return Err(Error::Config(format!("reference needs modes ≥ 1 and a grid of at least 2×2, got {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierReference {
    pub pde: PdeKind,
    pub domain: Domain,
    /// Displacement coefficients `A_k`, `k = 1..=modes`.
    pub a: Vec<f64>,
    /// Velocity coefficients `B_k` (wave only; zeros for heat).
    pub b: Vec<f64>,
    /// Edge values `(b_L, b_R)` of the heat lift; zero for wave.
    pub lift: (f64, f64),
}

fn constant_edge(problem: &IbvpProblem, id: ComponentId) -> Result<f64> {
    match problem.component(id).map(|c| &c.target) {
        Some(Target::Constant(v)) => Ok(*v),
        _ => Err(Error::Unsupported(format!("the {} condition must be a constant", id.name()))),
    }
}

/// Discrete sine coefficients of `f` sampled at the interior nodes.
fn project(domain: &Domain, modes: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let n1 = (modes + 1) as f64;
    let samples: Vec<f64> = (1..=modes).map(|m| f(domain.x_min + domain.width() * m as f64 / n1)).collect();
    (1..=modes)
        .map(|k| {
            let s: f64 = samples.iter().enumerate().map(|(i, v)| v * (k as f64 * PI * (i + 1) as f64 / n1).sin()).sum();
            2.0 / n1 * s
        })
        .collect()
}

/// Sine-series reference for a heat or wave problem.
///
/// Heat edges must be constant; wave edges must be zero.
pub fn build_reference(problem: &IbvpProblem, modes: usize) -> Result<FourierReference> {
    if modes == 0 {
        return Err(Error::Config("the reference needs at least one mode".into()));
    }
    let domain = problem.domain;
    let left = constant_edge(problem, ComponentId::LeftEdge)?;
    let right = constant_edge(problem, ComponentId::RightEdge)?;
    let initial = problem
        .component(ComponentId::InitialLine)
        .ok_or_else(|| Error::Unsupported("no initial condition".into()))?;
    match problem.pde {
        PdeKind::Heat => {
            let lift = (left, right);
            let w = |x: f64| left + (right - left) * (x - domain.x_min) / domain.width();
            let a = project(&domain, modes, |x| initial.target.eval(x) - w(x));
            Ok(FourierReference { pde: PdeKind::Heat, domain, b: vec![0.0; modes], a, lift })
        }
        PdeKind::Wave => {
            if left != 0.0 || right != 0.0 {
                return Err(Error::Unsupported("wave references need zero edge values".into()));
            }
            let velocity = problem
                .component(ComponentId::InitialVelocityLine)
                .ok_or_else(|| Error::Unsupported("no initial velocity condition".into()))?;
            let a = project(&domain, modes, |x| initial.target.eval(x));
            let b = project(&domain, modes, |x| velocity.target.eval(x));
            Ok(FourierReference { pde: PdeKind::Wave, domain, a, b, lift: (0.0, 0.0) })
        }
    }
}

impl FourierReference {
    pub fn modes(&self) -> usize {
        self.a.len()
    }

    /// `ω_k = kπ/width`.
    pub fn omega(&self, k: usize) -> f64 {
        k as f64 * PI / self.domain.width()
    }

    /// The linear lift `w(x)` (zero for wave).
    pub fn lift_at(&self, x: f64) -> f64 {
        let (l, r) = self.lift;
        l + (r - l) * (x - self.domain.x_min) / self.domain.width()
    }

    /// Projection nodes `x_m`.
    pub fn nodes(&self) -> Vec<f64> {
        let n1 = (self.modes() + 1) as f64;
        (1..=self.modes()).map(|m| self.domain.x_min + self.domain.width() * m as f64 / n1).collect()
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let xi = x - self.domain.x_min;
        let tau = t - self.domain.t_min;
        let mut s = 0.0;
        for (i, (&a, &b)) in self.a.iter().zip(&self.b).enumerate() {
            let w = self.omega(i + 1);
            let temporal = match self.pde {
                PdeKind::Heat => {
                    let decay = (-w * w * tau).exp();
                    if decay == 0.0 {
                        break;
                    }
                    a * decay
                }
                PdeKind::Wave => a * (w * tau).cos() + b / w * (w * tau).sin(),
            };
            s += temporal * (w * xi).sin();
        }
        self.lift_at(x) + s
    }

    pub fn eval_points(&self, points: &[[f64; 2]]) -> Vec<f64> {
        points.par_iter().map(|&[x, t]| self.eval(x, t)).collect()
    }
}

/// `‖pred − ref‖₂ / ‖ref‖₂` over matching grid values.
pub fn l2re(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::Config(format!("field sizes differ: {} vs {}", pred.len(), reference.len())));
    }
    let num: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r).powi(2)).sum();
    let den: f64 = reference.iter().map(|r| r * r).sum();
    if den == 0.0 {
        return Err(Error::UndefinedMetric("reference field has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

/// `max |pred − ref|`.
pub fn max_abs_error(pred: &[f64], reference: &[f64]) -> f64 {
    pred.iter().zip(reference).map(|(p, r)| (p - r).abs()).fold(0.0, f64::max)
}
