//! Bound-constrained nonlinear least squares over the pooled nonlinear
//! parameters of an active set, with the amplitudes eliminated by a ridge
//! solve at every trial point (variable projection).
//!
//! The outer method is a trust-region iteration on the Gauss-Newton model in
//! Jacobian-scaled variables. Steps that leave the box are reflected back or
//! cut off at the bounds, whichever the model prefers; parameters held on a
//! bound by the gradient are frozen for the step. The Jacobian is formed by
//! finite differences.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::BaseFamily;
use crate::error::{Error, Result};
use crate::geometry::TrainingSet;
use crate::linalg::{dot, norm, DesignMatrix, NormalSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustRegionConfig {
    /// Accepted iterations per call.
    pub max_iterations: usize,
    /// Relative finite-difference step, `h = fd_step·max(1, |θ|)`.
    pub fd_step: f64,
    /// Initial radius relative to the scaled norm of the start point.
    pub initial_radius: f64,
    pub radius_expand: f64,
    pub radius_shrink: f64,
    /// Stop when the scaled gradient falls below this (relative to `1 + ‖r‖²`).
    pub gradient_tol: f64,
    /// Stop when the radius falls below this (relative to the scaled point).
    pub step_tol: f64,
    pub subproblem: Subproblem,
}

/// How the step inside the trust region is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subproblem {
    /// Minimizer of the model on the ball, from an eigendecomposition of
    /// `JᵀJ` (Levenberg-Marquardt parametrization).
    #[default]
    Exact,
    /// Dogleg path between the Cauchy point and the Gauss-Newton step.
    Dogleg,
}

impl Default for TrustRegionConfig {
    fn default() -> Self {
        TrustRegionConfig {
            max_iterations: 4,
            fd_step: 1e-6,
            initial_radius: 1.0,
            radius_expand: 2.0,
            radius_shrink: 0.25,
            gradient_tol: 1e-12,
            step_tol: 1e-12,
            subproblem: Subproblem::Exact,
        }
    }
}

impl TrustRegionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.fd_step, self.initial_radius, self.radius_expand, self.radius_shrink, self.gradient_tol, self.step_tol];
        if self.max_iterations == 0 || positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config(format!("trust-region settings must be positive, got {self:?}")));
        }
        if !(self.radius_shrink < 1.0 && self.radius_expand > 1.0) {
            return Err(Error::Config(format!(
                "need radius_shrink < 1 < radius_expand, got {} and {}",
                self.radius_shrink, self.radius_expand
            )));
        }
        Ok(())
    }
}

/// The reduced problem `min_θ ‖y − F(θ)a*(θ)‖²` with
/// `a*(θ) = argmin_a ‖y − F(θ)a‖² + λ‖a‖²`.
#[derive(Debug, Clone)]
pub struct VarProObjective<'a> {
    set: &'a TrainingSet,
    y: Vec<f64>,
    families: Vec<BaseFamily>,
    /// `offsets[i]..offsets[i+1]` are base `i`'s entries of θ.
    offsets: Vec<usize>,
    lambda: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// The objective evaluated at one θ.
#[derive(Debug, Clone)]
pub struct VarProPoint {
    pub theta: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub residual: Vec<f64>,
    pub mse: f64,
    /// `‖r‖² + λ‖a‖²`
    pub objective: f64,
    design: DesignMatrix,
    normal: NormalSystem,
}

impl VarProPoint {
    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    fn sum_squares(&self) -> f64 {
        dot(&self.residual, &self.residual)
    }
}

impl<'a> VarProObjective<'a> {
    pub fn new(set: &'a TrainingSet, families: Vec<BaseFamily>, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("ridge parameter must be non-negative, got {lambda}")));
        }
        let mut offsets = vec![0];
        let (mut lower, mut upper) = (Vec::new(), Vec::new());
        for f in &families {
            offsets.push(offsets.last().unwrap() + f.param_count());
            lower.extend(f.lower_bounds());
            upper.extend(f.upper_bounds());
        }
        Ok(VarProObjective { set, y: set.scaled_targets(), families, offsets, lambda, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn owner(&self, j: usize) -> usize {
        self.offsets.partition_point(|&o| o <= j) - 1
    }

    fn params<'t>(&self, theta: &'t [f64], i: usize) -> &'t [f64] {
        &theta[self.offsets[i]..self.offsets[i + 1]]
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::Parameter(format!("expected {} parameters, got {}", self.dim(), theta.len())));
        }
        Ok(())
    }

    /// Builds `F(θ)`, solves for `a*(θ)` and forms the residual.
    pub fn evaluate(&self, theta: &[f64]) -> Result<VarProPoint> {
        self.check(theta)?;
        let columns: Vec<Vec<f64>> = self
            .families
            .iter()
            .enumerate()
            .map(|(i, f)| f.design_column(self.params(theta, i), self.set))
            .collect::<Result<_>>()?;
        let design = DesignMatrix::from_columns(self.set.len(), &columns);
        let normal = design.normal_system(&self.y, self.lambda);
        let amplitudes = normal.solve()?;
        let fitted = design.apply(&amplitudes);
        Ok(self.finish(theta.to_vec(), design, fitted, normal, amplitudes))
    }

    fn finish(&self, theta: Vec<f64>, design: DesignMatrix, fitted: Vec<f64>, normal: NormalSystem, amplitudes: Vec<f64>) -> VarProPoint {
        let residual: Vec<f64> = self.y.iter().zip(fitted).map(|(y, p)| y - p).collect();
        let ss = dot(&residual, &residual);
        let mse = if residual.is_empty() { 0.0 } else { ss / residual.len() as f64 };
        let objective = ss + self.lambda * dot(&amplitudes, &amplitudes);
        VarProPoint { theta, amplitudes, residual, mse, objective, design, normal }
    }

    /// `y − F(θ)a*(θ)`.
    pub fn residual_at(&self, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate(theta)?.residual)
    }

    /// Residual after moving parameter `j` of `at` to `value`. Only the
    /// owning column is re-evaluated; `a*` comes from a fresh factorization.
    fn probe(&self, at: &VarProPoint, j: usize, value: f64) -> Result<Vec<f64>> {
        let i = self.owner(j);
        let mut theta = self.params(&at.theta, i).to_vec();
        theta[j - self.offsets[i]] = value;
        let column = self.families[i].design_column(&theta, self.set)?;
        let mut normal = at.normal.clone();
        normal.replace_column(&at.design, &self.y, i, &column);
        let a = normal.solve()?;
        let mut r = self.y.clone();
        for (k, &ak) in a.iter().enumerate() {
            let col = if k == i { &column[..] } else { at.design.column(k) };
            for (r, c) in r.iter_mut().zip(col) {
                *r -= ak * c;
            }
        }
        Ok(r)
    }

    /// Finite-difference Jacobian of the residual at `at`, `L × dim`.
    ///
    /// Central differences with `h_j = fd_step·max(1, |θ_j|)`; steps are
    /// truncated at the bounds, falling back to one-sided differences.
    pub fn jacobian_fd(&self, at: &VarProPoint, fd_step: f64) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                fd_derivative(at.theta[j], self.lower[j], self.upper[j], fd_step, &at.residual, |v| {
                    self.probe(at, j, v)
                })
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_iterator(self.set.len(), n, columns.into_iter().flatten()))
    }

    /// Moves `theta` strictly inside the box by `1e-9·range` where needed.
    pub fn clamp_inward(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| {
                let eps = 1e-9 * (hi - lo);
                if hi - lo <= 2.0 * eps {
                    0.5 * (lo + hi)
                } else {
                    v.clamp(lo + eps, hi - eps)
                }
            })
            .collect()
    }

    /// `theta + step` cut off at the bounds, then clamped inward.
    fn truncate(&self, theta: &[f64], step: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = theta.iter().zip(step).map(|(x, p)| x + p).collect();
        self.clamp_inward(&raw)
    }

    /// Whether parameter `j` sits on a bound that the descent direction
    /// `-gradient` points through.
    fn pinned(&self, theta: &[f64], j: usize, gradient: f64) -> bool {
        let tol = 1e-7 * (self.upper[j] - self.lower[j]);
        (theta[j] - self.lower[j] <= tol && gradient > 0.0) || (self.upper[j] - theta[j] <= tol && gradient < 0.0)
    }

    /// Reflects `theta + step` off violated bounds, then clamps inward.
    fn reflect(&self, theta: &[f64], step: &[f64]) -> Vec<f64> {
        let raw: Vec<f64> = theta
            .iter()
            .zip(step)
            .zip(self.lower.iter().zip(&self.upper))
            .map(|((&x, &p), (&lo, &hi))| {
                let v = x + p;
                if v > hi {
                    hi - (v - hi)
                } else if v < lo {
                    lo + (lo - v)
                } else {
                    v
                }
            })
            .collect();
        self.clamp_inward(&raw)
    }
}

/// Result of one [`refine`] call.
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub point: VarProPoint,
    pub accepted: usize,
    pub evaluations: usize,
    /// Set when refinement was abandoned, e.g. on a non-finite Jacobian.
    pub warning: Option<String>,
}

/// Runs the trust-region iteration from `theta0`.
///
/// Steps are accepted only when they lower the pooled MSE without raising
/// the regularized objective, so neither ever increases.
pub fn refine(obj: &VarProObjective<'_>, theta0: &[f64], cfg: &TrustRegionConfig) -> Result<RefineOutcome> {
    cfg.validate()?;
    let start = obj.evaluate(theta0)?;
    let n = obj.dim();
    let mut evaluations = 1;
    if n == 0 {
        return Ok(RefineOutcome { point: start, accepted: 0, evaluations, warning: None });
    }
    let inner = obj.clamp_inward(theta0);
    let mut cur = if inner == theta0 {
        start.clone()
    } else {
        evaluations += 1;
        obj.evaluate(&inner)?
    };
    let mut scale = vec![0.0f64; n];
    let mut radius: Option<f64> = None;
    let mut accepted = 0;
    let max_trials = 30 + 10 * cfg.max_iterations;
    let mut trials = 0;

    'outer: while accepted < cfg.max_iterations {
        let jac = obj.jacobian_fd(&cur, cfg.fd_step);
        evaluations += 2 * n;
        let jac = match jac {
            Ok(j) if j.iter().all(|v| v.is_finite()) => j,
            _ => {
                return Ok(RefineOutcome {
                    point: start,
                    accepted: 0,
                    evaluations,
                    warning: Some("non-finite Jacobian; refinement skipped".into()),
                });
            }
        };
        for (j, d) in scale.iter_mut().enumerate() {
            let cn = jac.column(j).norm();
            *d = d.max(cn);
        }
        let d: Vec<f64> = scale.iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect();
        let mut js = jac;
        for (j, dj) in d.iter().enumerate() {
            js.column_mut(j).scale_mut(1.0 / dj);
        }
        let r = DVector::from_column_slice(&cur.residual);
        let g_full = js.tr_mul(&r);
        let ss = cur.sum_squares();
        // parameters held at a bound by a gradient pointing outward stay fixed
        let free: Vec<usize> = (0..n).filter(|&j| !obj.pinned(&cur.theta, j, g_full[j])).collect();
        if free.is_empty() {
            break;
        }
        let js = js.select_columns(&free);
        let gs = js.tr_mul(&r);
        if gs.amax() <= cfg.gradient_tol * (1.0 + ss) {
            break;
        }
        let h = js.tr_mul(&js);
        let stepper = StepModel::new(cfg.subproblem, &js, &r, &gs, &h);
        let x_norm = cur.theta.iter().zip(&d).map(|(x, d)| (x * d).powi(2)).sum::<f64>().sqrt().max(1.0);
        let mut delta = radius.unwrap_or(cfg.initial_radius * x_norm);
        let model = |p: &DVector<f64>| gs.dot(p) + 0.5 * p.dot(&(&h * p));
        let reduced = |theta: &[f64]| {
            DVector::from_iterator(free.len(), free.iter().map(|&j| (theta[j] - cur.theta[j]) * d[j]))
        };

        loop {
            trials += 1;
            if trials > max_trials || delta < cfg.step_tol * x_norm {
                break 'outer;
            }
            let ps = stepper.step(delta);
            let mut step = vec![0.0; n];
            for (k, &j) in free.iter().enumerate() {
                step[j] = ps[k] / d[j];
            }
            // reflected or truncated at the bounds, whichever the model prefers
            let reflected = obj.reflect(&cur.theta, &step);
            let truncated = obj.truncate(&cur.theta, &step);
            let theta = if model(&reduced(&truncated)) < model(&reduced(&reflected)) { truncated } else { reflected };
            if theta == cur.theta {
                break 'outer;
            }
            let taken = reduced(&theta);
            let predicted = -model(&taken);
            evaluations += 1;
            let trial = obj.evaluate(&theta).ok().filter(|p| p.mse.is_finite() && p.objective.is_finite());
            let (ok, rho) = match &trial {
                Some(p) => {
                    let actual = 0.5 * (ss - p.sum_squares());
                    let rho = if predicted > 0.0 { actual / predicted } else { -1.0 };
                    (p.mse < cur.mse && p.objective <= cur.objective, rho)
                }
                None => (false, -1.0),
            };
            if !ok || rho < 0.25 {
                delta *= cfg.radius_shrink;
            } else if rho > 0.75 && taken.norm() >= 0.99 * delta {
                delta *= cfg.radius_expand;
            }
            if ok {
                cur = trial.unwrap();
                accepted += 1;
                radius = Some(delta);
                continue 'outer;
            }
        }
    }

    if cur.mse > start.mse + 1e-14 {
        cur = start;
    }
    Ok(RefineOutcome { point: cur, accepted, evaluations, warning: None })
}

/// Finite-difference derivative of a vector function at `x` in `[lo, hi]`.
///
/// `h = fd_step·max(1, |x|)`, truncated at the bounds. Uses central
/// differences when both sides fit and one-sided ones otherwise; `base` is
/// the function value at `x`. `eval` is only called inside the bounds.
pub fn fd_derivative(
    x: f64,
    lo: f64,
    hi: f64,
    fd_step: f64,
    base: &[f64],
    eval: impl Fn(f64) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let h = fd_step * x.abs().max(1.0);
    let up = h.min(hi - x).max(0.0);
    let down = h.min(x - lo).max(0.0);
    let plus = if up > 0.0 { Some(eval(x + up)?) } else { None };
    let minus = if down > 0.0 { Some(eval(x - down)?) } else { None };
    Ok(match (plus, minus) {
        (Some(p), Some(m)) => p.iter().zip(&m).map(|(p, m)| (p - m) / (up + down)).collect(),
        (Some(p), None) => p.iter().zip(base).map(|(p, r)| (p - r) / up).collect(),
        (None, Some(m)) => base.iter().zip(&m).map(|(r, m)| (r - m) / down).collect(),
        (None, None) => vec![0.0; base.len()],
    })
}

enum StepModel<'a> {
    Exact { vectors: DMatrix<f64>, values: Vec<f64>, w: Vec<f64>, gn_norm: f64 },
    Dogleg { gn: DVector<f64>, g: &'a DVector<f64>, h: &'a DMatrix<f64> },
}

impl<'a> StepModel<'a> {
    fn new(kind: Subproblem, j: &DMatrix<f64>, r: &DVector<f64>, g: &'a DVector<f64>, h: &'a DMatrix<f64>) -> Self {
        match kind {
            Subproblem::Dogleg => StepModel::Dogleg { gn: gauss_newton_step(j, r), g, h },
            Subproblem::Exact => {
                let eig = h.clone().symmetric_eigen();
                let values: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
                let w: Vec<f64> = eig.eigenvectors.tr_mul(g).iter().copied().collect();
                let floor = 1e-12 * values.iter().copied().fold(0.0, f64::max);
                let gn_norm = w
                    .iter()
                    .zip(&values)
                    .filter(|(_, &l)| l > floor)
                    .map(|(w, l)| (w / l).powi(2))
                    .sum::<f64>()
                    .sqrt();
                StepModel::Exact { vectors: eig.eigenvectors, values, w, gn_norm }
            }
        }
    }

    /// Model minimizer within radius `delta`.
    fn step(&self, delta: f64) -> DVector<f64> {
        match self {
            StepModel::Dogleg { gn, g, h } => dogleg(gn, g, h, delta),
            StepModel::Exact { vectors, values, w, gn_norm } => {
                let floor = 1e-12 * values.iter().copied().fold(0.0, f64::max);
                let coeffs = |mu: f64| -> Vec<f64> {
                    w.iter()
                        .zip(values)
                        .map(|(w, &l)| if mu == 0.0 && l <= floor { 0.0 } else { -w / (l + mu) })
                        .collect()
                };
                let length = |c: &[f64]| c.iter().map(|v| v * v).sum::<f64>().sqrt();
                let c = if *gn_norm <= delta {
                    coeffs(0.0)
                } else {
                    // ‖p(μ)‖ decreases in μ and ‖p(‖g‖/Δ)‖ ≤ Δ
                    let g_norm = length(w);
                    let mut hi = g_norm / delta;
                    let mut lo = hi * 1e-30;
                    for _ in 0..200 {
                        let mid = (lo * hi).sqrt();
                        if length(&coeffs(mid)) > delta {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                        if hi / lo < 1.0 + 1e-10 {
                            break;
                        }
                    }
                    coeffs(hi)
                };
                vectors * DVector::from_vec(c)
            }
        }
    }
}

/// Least-norm least-squares solution of `J p = −r`.
fn gauss_newton_step(j: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    let svd = j.clone().svd(true, true);
    let tol = svd.singular_values.max() * 1e-13;
    svd.solve(&(-r), tol).unwrap_or_else(|_| DVector::zeros(j.ncols()))
}

/// Dogleg step of length at most `delta` in the scaled variables.
fn dogleg(gn: &DVector<f64>, g: &DVector<f64>, h: &DMatrix<f64>, delta: f64) -> DVector<f64> {
    let gn_norm = gn.norm();
    if gn_norm.is_finite() && gn_norm <= delta {
        return gn.clone();
    }
    let gg = g.norm_squared();
    let ghg = g.dot(&(h * g));
    let steepest = -g * (delta / gg.sqrt());
    if !(ghg > 0.0) || !gn_norm.is_finite() {
        return steepest;
    }
    let cauchy = -g * (gg / ghg);
    let cn = cauchy.norm();
    if cn >= delta {
        return steepest;
    }
    // ‖c + τ(p − c)‖ = Δ
    let diff = gn - &cauchy;
    let a = diff.norm_squared();
    let b = 2.0 * cauchy.dot(&diff);
    let c = cn * cn - delta * delta;
    let tau = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    cauchy + diff * tau
}

/// Squared norm of `v` divided by its length.
pub fn pooled_mse(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        norm(v).powi(2) / v.len() as f64
    }
}
