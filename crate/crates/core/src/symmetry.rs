//! Seed solutions and one-parameter Lie point transformations of the heat
//! and wave equations.
//!
//! Every transformation used here has the form
//!
//! ```text
//! (T_θ f)(x, t) = m_θ(x, t) · f(X_θ(x, t), T_θ(x, t))
//! ```
//!
//! so a chain `T_k ∘ … ∘ T_1 ∘ f_seed` is evaluated by walking from the
//! outermost transform inwards, accumulating the multiplier and the point
//! map together with their first derivatives. The seed is evaluated last,
//! at the fully mapped point, and the chain rule assembles `∂x` and `∂t`.
//!
//! Chains are stored innermost first: `transforms[0]` acts on the seed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, PdeKind};

/// Function value together with its first partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub dx: f64,
    pub dt: f64,
}

impl Jet {
    pub fn new(value: f64, dx: f64, dt: f64) -> Self {
        Jet { value, dx, dt }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.dx.is_finite() && self.dt.is_finite()
    }
}

/// Anything that can be evaluated with first partials at `(x, t)`.
pub trait SolutionFn {
    fn jet(&self, x: f64, t: f64) -> Result<Jet>;

    fn value(&self, x: f64, t: f64) -> Result<f64> {
        self.jet(x, t).map(|j| j.value)
    }
}

impl<F: SolutionFn + ?Sized> SolutionFn for &F {
    fn jet(&self, x: f64, t: f64) -> Result<Jet> {
        (**self).jet(x, t)
    }
    fn value(&self, x: f64, t: f64) -> Result<f64> {
        (**self).value(x, t)
    }
}

/// Closed-form exact solutions used as starting points for transform chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seed {
    /// `1`, solves both equations.
    Constant,
    /// `sin(x) e^{-t}` (heat).
    HeatMode,
    /// `sin(x) cos(t)` (wave).
    StandingWave,
    /// `e^{-(x-t)²} + e^{-(x+t)²}` (wave).
    BlobPair,
}

impl Seed {
    pub const ALL: [Seed; 4] = [Seed::Constant, Seed::HeatMode, Seed::StandingWave, Seed::BlobPair];

    pub fn name(self) -> &'static str {
        match self {
            Seed::Constant => "constant",
            Seed::HeatMode => "heat_mode",
            Seed::StandingWave => "standing_wave",
            Seed::BlobPair => "blob_pair",
        }
    }

    pub fn solves(self, pde: PdeKind) -> bool {
        match self {
            Seed::Constant => true,
            Seed::HeatMode => pde == PdeKind::Heat,
            Seed::StandingWave | Seed::BlobPair => pde == PdeKind::Wave,
        }
    }

    /// Seeds that solve `pde`.
    pub fn catalog(pde: PdeKind) -> Vec<Seed> {
        Self::ALL.into_iter().filter(|s| s.solves(pde)).collect()
    }

    #[inline]
    pub fn eval(self, x: f64, t: f64) -> Jet {
        match self {
            Seed::Constant => Jet::new(1.0, 0.0, 0.0),
            Seed::HeatMode => {
                let (s, c) = x.sin_cos();
                let e = (-t).exp();
                Jet::new(s * e, c * e, -s * e)
            }
            Seed::StandingWave => {
                let (sx, cx) = x.sin_cos();
                let (st, ct) = t.sin_cos();
                Jet::new(sx * ct, cx * ct, -sx * st)
            }
            Seed::BlobPair => {
                let (u, v) = (x - t, x + t);
                let (eu, ev) = ((-u * u).exp(), (-v * v).exp());
                let (du, dv) = (-2.0 * u * eu, -2.0 * v * ev);
                Jet::new(eu + ev, du + dv, -du + dv)
            }
        }
    }

    #[inline]
    pub fn eval_value(self, x: f64, t: f64) -> f64 {
        match self {
            Seed::Constant => 1.0,
            Seed::HeatMode => x.sin() * (-t).exp(),
            Seed::StandingWave => x.sin() * t.cos(),
            Seed::BlobPair => (-(x - t) * (x - t)).exp() + (-(x + t) * (x + t)).exp(),
        }
    }

    /// Expression in `x`/`t` syntax understood by common evaluators.
    pub fn render(self, x: &str, t: &str) -> String {
        match self {
            Seed::Constant => "1".to_string(),
            Seed::HeatMode => format!("sin({x})*exp(-({t}))"),
            Seed::StandingWave => format!("sin({x})*cos({t})"),
            Seed::BlobPair => format!("(exp(-((({x})-({t}))^2))+exp(-((({x})+({t}))^2)))"),
        }
    }
}

impl SolutionFn for Seed {
    fn jet(&self, x: f64, t: f64) -> Result<Jet> {
        Ok(self.eval(x, t))
    }
    fn value(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.eval_value(x, t))
    }
}

/// Identifiers of the implemented one-parameter transformations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    /// `f(x - θ, t)`
    HeatT1,
    /// `f(x, t - θ)`
    HeatT2,
    /// `e^θ f(x, t)`
    HeatT3,
    /// `f(e^{-θ} x, e^{-2θ} t)`
    HeatT4,
    /// `e^{-θx + θ²t} f(x - 2θt, t)`
    HeatT5,
    /// `(1+4θt)^{-1/2} exp(-θx²/(1+4θt)) f(x/(1+4θt), t/(1+4θt))`
    HeatT6,
    /// `f(x - θ, t)`
    WaveT1,
    /// `f(e^θ x, e^θ t)`
    WaveT2,
}

/// Local action of a transform at a point: multiplier, mapped point and
/// their derivatives with respect to the outer `(x, t)`.
#[derive(Debug, Clone, Copy)]
struct LocalAction {
    mult: f64,
    mult_grad: [f64; 2],
    point: [f64; 2],
    /// `jac[i][j] = ∂point_i / ∂(x, t)_j`
    jac: [[f64; 2]; 2],
}

const IDENTITY: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

fn singular_t6(theta: f64, t: f64) -> Error {
    Error::Domain(format!("heat T6 with theta = {theta} is singular at t = {t} (1 + 4 theta t <= 0)"))
}

impl TransformKind {
    pub const ALL: [TransformKind; 8] = [
        TransformKind::HeatT1,
        TransformKind::HeatT2,
        TransformKind::HeatT3,
        TransformKind::HeatT4,
        TransformKind::HeatT5,
        TransformKind::HeatT6,
        TransformKind::WaveT1,
        TransformKind::WaveT2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::HeatT1 => "heat_t1",
            TransformKind::HeatT2 => "heat_t2",
            TransformKind::HeatT3 => "heat_t3",
            TransformKind::HeatT4 => "heat_t4",
            TransformKind::HeatT5 => "heat_t5",
            TransformKind::HeatT6 => "heat_t6",
            TransformKind::WaveT1 => "wave_t1",
            TransformKind::WaveT2 => "wave_t2",
        }
    }

    pub fn pde(self) -> PdeKind {
        match self {
            TransformKind::WaveT1 | TransformKind::WaveT2 => PdeKind::Wave,
            _ => PdeKind::Heat,
        }
    }

    pub fn catalog(pde: PdeKind) -> Vec<TransformKind> {
        Self::ALL.into_iter().filter(|k| k.pde() == pde).collect()
    }

    /// Multiplier and mapped point only.
    #[inline]
    fn map(self, theta: f64, p: [f64; 2]) -> Result<(f64, [f64; 2])> {
        let [x, t] = p;
        Ok(match self {
            TransformKind::HeatT1 | TransformKind::WaveT1 => (1.0, [x - theta, t]),
            TransformKind::HeatT2 => (1.0, [x, t - theta]),
            TransformKind::HeatT3 => (theta.exp(), p),
            TransformKind::HeatT4 => {
                let e = (-theta).exp();
                (1.0, [e * x, e * e * t])
            }
            TransformKind::HeatT5 => ((-theta * x + theta * theta * t).exp(), [x - 2.0 * theta * t, t]),
            TransformKind::HeatT6 => {
                let s = 1.0 + 4.0 * theta * t;
                if !(s > 0.0) {
                    return Err(singular_t6(theta, t));
                }
                let inv = 1.0 / s;
                (inv.sqrt() * (-theta * x * x * inv).exp(), [x * inv, t * inv])
            }
            TransformKind::WaveT2 => {
                let e = theta.exp();
                (1.0, [e * x, e * t])
            }
        })
    }

    #[inline]
    fn act(self, theta: f64, p: [f64; 2]) -> Result<LocalAction> {
        let [x, t] = p;
        Ok(match self {
            TransformKind::HeatT1 | TransformKind::WaveT1 => {
                LocalAction { mult: 1.0, mult_grad: [0.0, 0.0], point: [x - theta, t], jac: IDENTITY }
            }
            TransformKind::HeatT2 => {
                LocalAction { mult: 1.0, mult_grad: [0.0, 0.0], point: [x, t - theta], jac: IDENTITY }
            }
            TransformKind::HeatT3 => LocalAction { mult: theta.exp(), mult_grad: [0.0, 0.0], point: p, jac: IDENTITY },
            TransformKind::HeatT4 => {
                let e = (-theta).exp();
                let e2 = e * e;
                LocalAction { mult: 1.0, mult_grad: [0.0, 0.0], point: [e * x, e2 * t], jac: [[e, 0.0], [0.0, e2]] }
            }
            TransformKind::HeatT5 => {
                let m = (-theta * x + theta * theta * t).exp();
                LocalAction {
                    mult: m,
                    mult_grad: [-theta * m, theta * theta * m],
                    point: [x - 2.0 * theta * t, t],
                    jac: [[1.0, -2.0 * theta], [0.0, 1.0]],
                }
            }
            TransformKind::HeatT6 => {
                let s = 1.0 + 4.0 * theta * t;
                if !(s > 0.0) {
                    return Err(singular_t6(theta, t));
                }
                let inv = 1.0 / s;
                let m = inv.sqrt() * (-theta * x * x * inv).exp();
                LocalAction {
                    mult: m,
                    mult_grad: [
                        m * (-2.0 * theta * x * inv),
                        m * (-2.0 * theta * inv + 4.0 * theta * theta * x * x * inv * inv),
                    ],
                    point: [x * inv, t * inv],
                    jac: [[inv, -4.0 * theta * x * inv * inv], [0.0, inv * inv]],
                }
            }
            TransformKind::WaveT2 => {
                let e = theta.exp();
                LocalAction { mult: 1.0, mult_grad: [0.0, 0.0], point: [e * x, e * t], jac: [[e, 0.0], [0.0, e]] }
            }
        })
    }

    /// Symbolic action: `(multiplier, X, T)` given the outer coordinate
    /// expressions.
    fn render(self, theta: f64, x: &str, t: &str) -> (Option<String>, String, String) {
        let th = format!("({theta:?})");
        match self {
            TransformKind::HeatT1 | TransformKind::WaveT1 => (None, format!("(({x})-{th})"), t.to_string()),
            TransformKind::HeatT2 => (None, x.to_string(), format!("(({t})-{th})")),
            TransformKind::HeatT3 => (Some(format!("exp({th})")), x.to_string(), t.to_string()),
            TransformKind::HeatT4 => {
                (None, format!("(exp(-{th})*({x}))"), format!("(exp(-2*{th})*({t}))"))
            }
            TransformKind::HeatT5 => (
                Some(format!("exp(-{th}*({x})+{th}^2*({t}))")),
                format!("(({x})-2*{th}*({t}))"),
                t.to_string(),
            ),
            TransformKind::HeatT6 => {
                let s = format!("(1+4*{th}*({t}))");
                (
                    Some(format!("({s}^(-0.5)*exp(-{th}*({x})^2/{s}))")),
                    format!("(({x})/{s})"),
                    format!("(({t})/{s})"),
                )
            }
            TransformKind::WaveT2 => (None, format!("(exp({th})*({x}))"), format!("(exp({th})*({t}))")),
        }
    }
}

/// How candidate parameters are drawn between the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Uniform,
    /// `exp(U[ln lo, ln hi])`; requires `lo > 0`.
    LogUniform,
}

/// A transform kind with its admissible parameter range and sampling rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LieTransform {
    pub kind: TransformKind,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub sampling: Sampling,
}

/// Margin kept between the heat T6 lower bound and its singular value.
pub const T6_SINGULAR_MARGIN: f64 = 1e-3;
/// Default upper bound of the heat T6 parameter.
pub const T6_DEFAULT_MAX: f64 = 50.0;

impl LieTransform {
    pub fn new(kind: TransformKind, lower: f64, upper: f64, sampling: Sampling) -> Self {
        LieTransform { kind, lower, upper, sampling }
    }

    pub fn uniform(kind: TransformKind, lower: f64, upper: f64) -> Self {
        Self::new(kind, lower, upper, Sampling::Uniform)
    }

    pub fn log_uniform(kind: TransformKind, lower: f64, upper: f64) -> Self {
        Self::new(kind, lower, upper, Sampling::LogUniform)
    }

    /// General-purpose bounds for a transform on `domain`.
    pub fn standard(kind: TransformKind, domain: &Domain) -> Self {
        use std::f64::consts::PI;
        use TransformKind::*;
        let ln60 = 60f64.ln();
        match kind {
            HeatT1 | WaveT1 => Self::uniform(kind, -PI, PI),
            HeatT2 => Self::uniform(kind, -1.0, 1.0),
            HeatT3 => Self::uniform(kind, -5.0, 5.0),
            HeatT4 | WaveT2 => Self::uniform(kind, -ln60, ln60),
            HeatT5 => Self::uniform(kind, -5.0, 5.0),
            HeatT6 => Self::uniform(kind, t6_lower_bound(domain), T6_DEFAULT_MAX),
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lower && theta <= self.upper
    }

    /// Bounds are ordered and compatible with the sampling rule.
    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower <= self.upper) {
            return Err(Error::Config(format!(
                "{}: bounds [{}, {}] are not an interval",
                self.kind.name(),
                self.lower,
                self.upper
            )));
        }
        if self.sampling == Sampling::LogUniform && self.lower <= 0.0 {
            return Err(Error::Config(format!(
                "{}: log-uniform sampling needs a positive lower bound, got {}",
                self.kind.name(),
                self.lower
            )));
        }
        Ok(())
    }

    /// Checks that the whole parameter range is free of singularities on
    /// `domain`.
    pub fn validate_on(&self, domain: &Domain) -> Result<()> {
        self.validate()?;
        if self.kind == TransformKind::HeatT6 && 1.0 + 4.0 * self.lower * domain.t_max.max(domain.t_min.abs()) <= 0.0 {
            return Err(Error::Parameter(format!(
                "heat_t6 lower bound {} reaches the singularity 1 + 4 theta t = 0 inside the domain",
                self.lower
            )));
        }
        Ok(())
    }

    pub fn check(&self, theta: f64) -> Result<()> {
        if !self.contains(theta) {
            return Err(Error::Parameter(format!(
                "{} parameter {theta} outside [{}, {}]",
                self.kind.name(),
                self.lower,
                self.upper
            )));
        }
        Ok(())
    }
}

/// `-1/(4 t_max) + margin`, the smallest admissible heat T6 parameter.
pub fn t6_lower_bound(domain: &Domain) -> f64 {
    -1.0 / (4.0 * domain.t_max.max(f64::MIN_POSITIVE)) + T6_SINGULAR_MARGIN
}

/// Applies a single transform to an arbitrary solution.
///
/// The result evaluates lazily; singular configurations surface as
/// [`Error::Domain`] at evaluation time.
pub fn apply_transform<F: SolutionFn>(transform: &LieTransform, f: F, theta: f64) -> Result<Transformed<F>> {
    transform.check(theta)?;
    Ok(Transformed { inner: f, kind: transform.kind, theta })
}

/// `T_θ f` for a single transform, produced by [`apply_transform`].
#[derive(Debug, Clone)]
pub struct Transformed<F> {
    inner: F,
    kind: TransformKind,
    theta: f64,
}

impl<F: SolutionFn> SolutionFn for Transformed<F> {
    fn jet(&self, x: f64, t: f64) -> Result<Jet> {
        let a = self.kind.act(self.theta, [x, t])?;
        let g = self.inner.jet(a.point[0], a.point[1])?;
        let inner_dx = g.dx * a.jac[0][0] + g.dt * a.jac[1][0];
        let inner_dt = g.dx * a.jac[0][1] + g.dt * a.jac[1][1];
        Ok(Jet::new(
            a.mult * g.value,
            a.mult_grad[0] * g.value + a.mult * inner_dx,
            a.mult_grad[1] * g.value + a.mult * inner_dt,
        ))
    }

    fn value(&self, x: f64, t: f64) -> Result<f64> {
        let (m, p) = self.kind.map(self.theta, [x, t])?;
        Ok(m * self.inner.value(p[0], p[1])?)
    }
}

/// Evaluates `T_k ∘ … ∘ T_1 ∘ seed` with partials; `transforms[0]` is `T_1`.
#[inline]
pub fn eval_composed(seed: Seed, transforms: &[LieTransform], params: &[f64], x: f64, t: f64) -> Result<Jet> {
    debug_assert_eq!(transforms.len(), params.len());
    let mut p = [x, t];
    let mut jac = IDENTITY;
    let mut mult = 1.0;
    let mut mult_grad = [0.0, 0.0];
    for (tr, &theta) in transforms.iter().zip(params).rev() {
        let a = tr.kind.act(theta, p)?;
        // ∇(μ m∘p) = m ∇μ + μ (∇_p m) J
        let gx = a.mult_grad[0] * jac[0][0] + a.mult_grad[1] * jac[1][0];
        let gt = a.mult_grad[0] * jac[0][1] + a.mult_grad[1] * jac[1][1];
        mult_grad = [mult_grad[0] * a.mult + mult * gx, mult_grad[1] * a.mult + mult * gt];
        mult *= a.mult;
        jac = [
            [
                a.jac[0][0] * jac[0][0] + a.jac[0][1] * jac[1][0],
                a.jac[0][0] * jac[0][1] + a.jac[0][1] * jac[1][1],
            ],
            [
                a.jac[1][0] * jac[0][0] + a.jac[1][1] * jac[1][0],
                a.jac[1][0] * jac[0][1] + a.jac[1][1] * jac[1][1],
            ],
        ];
        p = a.point;
    }
    let s = seed.eval(p[0], p[1]);
    let sx = s.dx * jac[0][0] + s.dt * jac[1][0];
    let st = s.dx * jac[0][1] + s.dt * jac[1][1];
    Ok(Jet::new(mult * s.value, mult_grad[0] * s.value + mult * sx, mult_grad[1] * s.value + mult * st))
}

/// Value-only variant of [`eval_composed`].
#[inline]
pub fn eval_composed_value(seed: Seed, transforms: &[LieTransform], params: &[f64], x: f64, t: f64) -> Result<f64> {
    let mut p = [x, t];
    let mut mult = 1.0;
    for (tr, &theta) in transforms.iter().zip(params).rev() {
        let (m, q) = tr.kind.map(theta, p)?;
        mult *= m;
        p = q;
    }
    Ok(mult * seed.eval_value(p[0], p[1]))
}

/// Closed-form expression of a composed chain with numeric parameters.
pub fn render_composed(seed: Seed, transforms: &[LieTransform], params: &[f64]) -> String {
    let mut x = "x".to_string();
    let mut t = "t".to_string();
    let mut factors = Vec::new();
    for (tr, &theta) in transforms.iter().zip(params).rev() {
        let (m, nx, nt) = tr.kind.render(theta, &x, &t);
        factors.extend(m);
        x = nx;
        t = nt;
    }
    factors.push(seed.render(&x, &t));
    factors.join("*")
}

/// A seed with an ordered chain of transforms and fixed parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformChain {
    pub seed: Seed,
    /// Innermost first.
    pub transforms: Vec<LieTransform>,
    pub params: Vec<f64>,
}

impl TransformChain {
    pub fn new(seed: Seed, transforms: Vec<LieTransform>, params: Vec<f64>) -> Result<Self> {
        if transforms.len() != params.len() {
            return Err(Error::Parameter(format!(
                "{} transforms but {} parameters",
                transforms.len(),
                params.len()
            )));
        }
        for (tr, &theta) in transforms.iter().zip(&params) {
            tr.check(theta)?;
        }
        Ok(TransformChain { seed, transforms, params })
    }

    pub fn seed_only(seed: Seed) -> Self {
        TransformChain { seed, transforms: Vec::new(), params: Vec::new() }
    }

    /// Value and both first partials at `(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> Result<Jet> {
        eval_composed(self.seed, &self.transforms, &self.params, x, t)
    }

    pub fn render(&self) -> String {
        render_composed(self.seed, &self.transforms, &self.params)
    }
}

impl SolutionFn for TransformChain {
    fn jet(&self, x: f64, t: f64) -> Result<Jet> {
        self.eval(x, t)
    }
    fn value(&self, x: f64, t: f64) -> Result<f64> {
        eval_composed_value(self.seed, &self.transforms, &self.params, x, t)
    }
}

/// Maximum absolute PDE residual of `f` over `grid`, from fourth-order
/// central differences of function values.
///
/// Stencils reach `2·h` from each grid point, so points must keep that
/// distance from the boundary. Non-finite values make the result infinite.
pub fn pde_residual(pde: PdeKind, f: impl Fn(f64, f64) -> f64, grid: &[[f64; 2]], h: f64) -> f64 {
    residual_terms(pde, &f, grid, h).0
}

/// Like [`pde_residual`], normalized by `1 + max(|time term|, |u_xx|)` over
/// the grid. Useful for steep functions whose absolute residual is dominated
/// by scale.
pub fn pde_residual_scaled(pde: PdeKind, f: impl Fn(f64, f64) -> f64, grid: &[[f64; 2]], h: f64) -> f64 {
    let (res, scale) = residual_terms(pde, &f, grid, h);
    res / (1.0 + scale)
}

fn residual_terms(pde: PdeKind, f: &dyn Fn(f64, f64) -> f64, grid: &[[f64; 2]], h: f64) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for &[x, t] in grid {
        let c = f(x, t);
        let (xm2, xm1, xp1, xp2) = (f(x - 2.0 * h, t), f(x - h, t), f(x + h, t), f(x + 2.0 * h, t));
        let (tm2, tm1, tp1, tp2) = (f(x, t - 2.0 * h), f(x, t - h), f(x, t + h), f(x, t + 2.0 * h));
        let uxx = (-xp2 + 16.0 * xp1 - 30.0 * c + 16.0 * xm1 - xm2) / (12.0 * h * h);
        let time = match pde {
            PdeKind::Heat => (-tp2 + 8.0 * tp1 - 8.0 * tm1 + tm2) / (12.0 * h),
            PdeKind::Wave => (-tp2 + 16.0 * tp1 - 30.0 * c + 16.0 * tm1 - tm2) / (12.0 * h * h),
        };
        let r = (time - uxx).abs();
        if !r.is_finite() {
            return (f64::INFINITY, f64::INFINITY);
        }
        worst = worst.max(r);
        scale = scale.max(time.abs()).max(uxx.abs());
    }
    (worst, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn heat_domain() -> Domain {
        Domain::heat_default()
    }

    fn std_tr(kind: TransformKind) -> LieTransform {
        let domain = match kind.pde() {
            PdeKind::Heat => Domain::heat_default(),
            PdeKind::Wave => Domain::wave_default(),
        };
        LieTransform::standard(kind, &domain)
    }

    #[test]
    fn t6_on_constant_matches_closed_form() {
        let tr = std_tr(TransformKind::HeatT6);
        for &theta in &[0.5, 3.0, 20.0, -1.5] {
            let g = apply_transform(&tr, Seed::Constant, theta).unwrap();
            for &(x, t) in &[(0.1, 0.0), (0.4, 0.05), (0.9, 0.1)] {
                let s: f64 = 1.0 + 4.0 * theta * t;
                let expected = s.powf(-0.5) * (-theta * x * x / s).exp();
                let got = g.value(x, t).unwrap();
                assert!((got - expected).abs() <= 1e-14 * expected.abs().max(1.0), "{theta} {x} {t}");
            }
        }
    }

    #[test]
    fn t4_rescales_heat_mode() {
        let tr = std_tr(TransformKind::HeatT4);
        for &lambda in &[0.7f64, 1.0, 2.0, 15.0] {
            let g = apply_transform(&tr, Seed::HeatMode, -lambda.ln()).unwrap();
            for &(x, t) in &[(0.3, 0.01), (0.8, 0.07)] {
                let expected = (lambda * x).sin() * (-lambda * lambda * t).exp();
                assert!((g.value(x, t).unwrap() - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn out_of_bounds_parameter_is_rejected() {
        let tr = LieTransform::uniform(TransformKind::HeatT1, -1.0, 1.0);
        assert!(matches!(apply_transform(&tr, Seed::Constant, 1.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn singular_t6_is_a_domain_error() {
        let tr = LieTransform::uniform(TransformKind::HeatT6, -10.0, 10.0);
        let g = apply_transform(&tr, Seed::Constant, -5.0).unwrap();
        assert!(matches!(g.value(0.5, 0.05), Err(Error::Domain(_))));
        assert!(matches!(g.jet(0.5, 0.05), Err(Error::Domain(_))));
        assert!(g.value(0.5, 0.01).is_ok());
    }

    #[test]
    fn t6_lower_bound_validation() {
        let d = heat_domain();
        assert!(std_tr(TransformKind::HeatT6).validate_on(&d).is_ok());
        let bad = LieTransform::uniform(TransformKind::HeatT6, -3.0, 1.0);
        assert!(bad.validate_on(&d).is_err());
        assert!(LieTransform::log_uniform(TransformKind::HeatT6, 0.0, 1.0).validate().is_err());
    }

    #[test]
    fn identity_at_zero_parameter() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in TransformKind::ALL {
            let tr = std_tr(kind);
            for seed in Seed::catalog(kind.pde()) {
                let g = apply_transform(&tr, seed, 0.0).unwrap();
                for _ in 0..100 {
                    let (x, t) = (rng.random_range(-1.0..2.0), rng.random_range(0.0..0.1));
                    let a = g.jet(x, t).unwrap();
                    let b = seed.eval(x, t);
                    assert!((a.value - b.value).abs() < 1e-15, "{kind:?} {seed:?}");
                    assert!((a.dx - b.dx).abs() < 1e-15 && (a.dt - b.dt).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn empty_chain_on_constant() {
        let c = TransformChain::seed_only(Seed::Constant);
        assert_eq!(c.eval(0.3, 0.7).unwrap(), Jet::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn translated_sine_vanishes_at_shift() {
        let c = TransformChain::new(Seed::HeatMode, vec![std_tr(TransformKind::HeatT1)], vec![0.3]).unwrap();
        assert_eq!(c.eval(0.3, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn wave_chain_matches_hand_composition() {
        // T2_a ∘ T1_d ∘ sin(x)cos(t) = sin(e^a x - d) cos(e^a t)
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a: f64 = rng.random_range(-1.0..1.5);
            let d: f64 = rng.random_range(-PI..PI);
            let c = TransformChain::new(
                Seed::StandingWave,
                vec![std_tr(TransformKind::WaveT1), std_tr(TransformKind::WaveT2)],
                vec![d, a],
            )
            .unwrap();
            let (x, t) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let expected = (a.exp() * x - d).sin() * (a.exp() * t).cos();
            assert!((c.eval(x, t).unwrap().value - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn chain_matches_nested_single_applications() {
        // forward-accumulated chain vs recursively nested apply_transform
        let d = heat_domain();
        let trs = vec![
            LieTransform::standard(TransformKind::HeatT1, &d),
            LieTransform::standard(TransformKind::HeatT4, &d),
            LieTransform::standard(TransformKind::HeatT6, &d),
            LieTransform::standard(TransformKind::HeatT5, &d),
            LieTransform::standard(TransformKind::HeatT1, &d),
        ];
        let params = vec![0.4, -1.2, 7.0, 0.6, 0.3];
        let chain = TransformChain::new(Seed::HeatMode, trs.clone(), params.clone()).unwrap();
        let l1 = apply_transform(&trs[0], Seed::HeatMode, params[0]).unwrap();
        let l2 = apply_transform(&trs[1], l1, params[1]).unwrap();
        let l3 = apply_transform(&trs[2], l2, params[2]).unwrap();
        let l4 = apply_transform(&trs[3], l3, params[3]).unwrap();
        let nested = apply_transform(&trs[4], l4, params[4]).unwrap();
        for &(x, t) in &[(0.1, 0.02), (0.5, 0.05), (0.93, 0.09)] {
            let a = chain.eval(x, t).unwrap();
            let b = nested.jet(x, t).unwrap();
            for (u, v) in [(a.value, b.value), (a.dx, b.dx), (a.dt, b.dt)] {
                assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0), "{u} vs {v}");
            }
            assert!((chain.value(x, t).unwrap() - a.value).abs() <= 1e-14 * a.value.abs().max(1.0));
        }
    }

    #[test]
    fn group_law_is_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in TransformKind::ALL {
            let tr = LieTransform::uniform(kind, -10.0, 10.0);
            for seed in Seed::catalog(kind.pde()) {
                for _ in 0..20 {
                    let (a, b): (f64, f64) = match kind {
                        TransformKind::HeatT6 => (rng.random_range(-1.0..3.0), rng.random_range(-1.0..3.0)),
                        _ => (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    };
                    let twice = apply_transform(&tr, apply_transform(&tr, seed, a).unwrap(), b).unwrap();
                    let once = apply_transform(&tr, seed, a + b).unwrap();
                    let (x, t) = (rng.random_range(0.0..1.0), rng.random_range(0.0..0.1));
                    let (u, v) = (twice.value(x, t).unwrap(), once.value(x, t).unwrap());
                    assert!((u - v).abs() <= 1e-10 * v.abs().max(1e-300), "{kind:?} {seed:?} {a} {b}: {u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn residual_of_exact_solutions() {
        let heat = Domain::heat_default().interior_grid(50, 50, 3e-4);
        let wave = Domain::wave_default().interior_grid(50, 50, 3e-4);
        let r = pde_residual(PdeKind::Heat, |x, t| x.sin() * (-t).exp(), &heat, 1e-4);
        assert!(r < 1e-6, "{r}");
        let r = pde_residual(PdeKind::Wave, |x, t| x.sin() * t.cos(), &wave, 1e-4);
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn residual_of_non_solution() {
        // u = x t: u_t - u_xx = x
        let r = pde_residual(PdeKind::Heat, |x, t| x * t, &[[0.5, 0.05]], 1e-4);
        assert!((r - 0.5).abs() < 1e-6, "{r}");
    }

    #[test]
    fn residual_flags_non_finite() {
        let r = pde_residual(PdeKind::Heat, |_, _| f64::NAN, &[[0.5, 0.05]], 1e-4);
        assert!(r.is_infinite());
    }

    #[test]
    fn transformed_seeds_solve_the_pde() {
        // Every transform and every seed, random in-bounds parameters. Heat T6
        // is restricted to parameters keeping 1 + 4θt ≥ 1/2 on the domain:
        // closer to the singularity the functions are too steep for a
        // finite-difference check at this step size.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for kind in TransformKind::ALL {
            let domain = Domain::default_for(kind.pde());
            let tr = LieTransform::standard(kind, &domain);
            let grid = domain.interior_grid(12, 12, 3e-4);
            let lower = match kind {
                TransformKind::HeatT6 => -0.125 / domain.t_max,
                _ => tr.lower,
            };
            for seed in Seed::catalog(kind.pde()) {
                for _ in 0..100 {
                    let theta = rng.random_range(lower..=tr.upper);
                    let g = apply_transform(&tr, seed, theta).unwrap();
                    let r = pde_residual_scaled(kind.pde(), |x, t| g.value(x, t).unwrap_or(f64::NAN), &grid, 1e-4);
                    assert!(r < 1e-5, "{kind:?} on {seed:?} with theta {theta}: {r}");
                }
            }
        }
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let d = heat_domain();
        let trs = vec![
            LieTransform::standard(TransformKind::HeatT1, &d),
            LieTransform::standard(TransformKind::HeatT4, &d),
            LieTransform::uniform(TransformKind::HeatT6, 0.0, 50.0),
            LieTransform::standard(TransformKind::HeatT5, &d),
            LieTransform::standard(TransformKind::HeatT1, &d),
        ];
        for _ in 0..100 {
            let params: Vec<f64> = vec![
                rng.random_range(-PI..PI),
                rng.random_range(-2.0..0.5),
                rng.random_range(0.0..50.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-0.5..1.5),
            ];
            let chain = TransformChain::new(Seed::HeatMode, trs.clone(), params).unwrap();
            let (x, t) = (rng.random_range(0.05..0.95), rng.random_range(0.01..0.09));
            let j = chain.eval(x, t).unwrap();
            let h = 1e-6;
            let f = |x, t| chain.value(x, t).unwrap();
            let fdx = (f(x + h, t) - f(x - h, t)) / (2.0 * h);
            let fdt = (f(x, t + h) - f(x, t - h)) / (2.0 * h);
            let scale = j.value.abs() + j.dx.abs() + j.dt.abs() + 1e-8;
            assert!((j.dx - fdx).abs() / scale < 1e-5, "dx {} vs {}", j.dx, fdx);
            assert!((j.dt - fdt).abs() / scale < 1e-5, "dt {} vs {}", j.dt, fdt);
        }
    }

    #[test]
    fn render_contains_substituted_numbers() {
        let d = heat_domain();
        let c = TransformChain::new(
            Seed::HeatMode,
            vec![LieTransform::standard(TransformKind::HeatT1, &d), LieTransform::standard(TransformKind::HeatT4, &d)],
            vec![0.25, -1.0],
        )
        .unwrap();
        let s = c.render();
        assert!(s.contains("sin") && s.contains("exp") && s.contains("0.25"), "{s}");
    }
}
