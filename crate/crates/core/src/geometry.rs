//! Rectangular space-time domains, their boundary components, initial
//! profiles and collocation sampling.
//!
//! A problem lives on `[x_min, x_max] × [t_min, t_max]`. Heat problems carry
//! three boundary components (initial line plus two constant-value edges);
//! wave problems carry four (initial line, zero-velocity line, two zero
//! edges).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two linear homogeneous PDEs supported by the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeKind {
    /// `u_t = u_xx`
    Heat,
    /// `u_tt = u_xx`
    Wave,
}

impl PdeKind {
    pub fn name(self) -> &'static str {
        match self {
            PdeKind::Heat => "heat",
            PdeKind::Wave => "wave",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Domain {
    pub fn new(x_min: f64, x_max: f64, t_min: f64, t_max: f64) -> Result<Self> {
        let d = Domain { x_min, x_max, t_min, t_max };
        d.validate()?;
        Ok(d)
    }

    /// `(0,1) × (0,0.1)`
    pub fn heat_default() -> Self {
        Domain { x_min: 0.0, x_max: 1.0, t_min: 0.0, t_max: 0.1 }
    }

    /// `(0,1) × (0,1)`
    pub fn wave_default() -> Self {
        Domain { x_min: 0.0, x_max: 1.0, t_min: 0.0, t_max: 1.0 }
    }

    pub fn default_for(pde: PdeKind) -> Self {
        match pde {
            PdeKind::Heat => Self::heat_default(),
            PdeKind::Wave => Self::wave_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.t_min, self.t_max].iter().all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.t_min >= self.t_max {
            return Err(Error::Config(format!(
                "domain must satisfy x_min < x_max and t_min < t_max, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn duration(&self) -> f64 {
        self.t_max - self.t_min
    }

    /// Whether `(x, t)` lies in the closed rectangle, with a relative slack.
    pub fn contains(&self, x: f64, t: f64) -> bool {
        let sx = 1e-12 * self.width().max(1.0);
        let st = 1e-12 * self.duration().max(1.0);
        x >= self.x_min - sx && x <= self.x_max + sx && t >= self.t_min - st && t <= self.t_max + st
    }

    /// Uniform `nx × nt` grid over the closure, `x` varying fastest.
    pub fn grid(&self, nx: usize, nt: usize) -> Vec<[f64; 2]> {
        let xs = linspace(self.x_min, self.x_max, nx);
        let ts = linspace(self.t_min, self.t_max, nt);
        ts.iter().flat_map(|&t| xs.iter().map(move |&x| [x, t])).collect()
    }

    /// `nx × nt` grid of strictly interior points, each at least `margin`
    /// away from the boundary.
    pub fn interior_grid(&self, nx: usize, nt: usize, margin: f64) -> Vec<[f64; 2]> {
        let xs = open_linspace(self.x_min + margin, self.x_max - margin, nx);
        let ts = open_linspace(self.t_min + margin, self.t_max - margin, nt);
        ts.iter().flat_map(|&t| xs.iter().map(move |&x| [x, t])).collect()
    }
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` points strictly inside `(a, b)`.
fn open_linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| a + (b - a) * i as f64 / (n + 1) as f64).collect()
}

/// Initial profile `u_0(x)`. Formulas are written for the unit interval and
/// evaluated on the domain's own `x` coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IcProfile {
    /// Power series `Σ c_k x^k`.
    Polynomial {
        #[serde(default = "IcProfile::default_polynomial")]
        coefficients: Vec<f64>,
    },
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "half")]
        center: f64,
        #[serde(default = "IcProfile::default_width")]
        width: f64,
    },
    /// `Σ a_k sin(ω_k π x)`; the plain sine profile is a single term.
    Sine {
        #[serde(default = "IcProfile::default_sine_terms")]
        terms: Vec<SineTerm>,
    },
    SineMix {
        #[serde(default = "IcProfile::default_sine_mix_terms")]
        terms: Vec<SineTerm>,
    },
    GaussianMix {
        #[serde(default = "IcProfile::default_gaussian_mix")]
        bumps: Vec<GaussianBump>,
    },
    /// Indicator profile. One jump: `level` for `x ≤ jump`, zero beyond.
    /// Two jumps: `level` on `(a, b]`, zero elsewhere. The value at a jump is
    /// always the left limit.
    Step {
        #[serde(default = "IcProfile::default_jumps")]
        jumps: Vec<f64>,
        #[serde(default = "one")]
        level: f64,
    },
    /// `u_0 ≡ value`
    Constant { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineTerm {
    pub amplitude: f64,
    /// Multiple of `π`.
    pub frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}

impl IcProfile {
    fn default_polynomial() -> Vec<f64> {
        vec![0.0, 4.0, -4.0]
    }
    fn default_width() -> f64 {
        0.08
    }
    fn default_sine_terms() -> Vec<SineTerm> {
        vec![SineTerm { amplitude: 1.0, frequency: 1.0 }]
    }
    fn default_sine_mix_terms() -> Vec<SineTerm> {
        vec![SineTerm { amplitude: 1.0, frequency: 1.0 }, SineTerm { amplitude: 0.5, frequency: 4.0 }]
    }
    fn default_gaussian_mix() -> Vec<GaussianBump> {
        vec![
            GaussianBump { amplitude: 1.0, center: 0.3, width: 0.06 },
            GaussianBump { amplitude: 0.7, center: 0.7, width: 0.1 },
        ]
    }
    fn default_jumps() -> Vec<f64> {
        vec![0.25, 0.75]
    }

    /// `4x(1-x)`, unit peak at `x = 1/2`.
    pub fn polynomial() -> Self {
        IcProfile::Polynomial { coefficients: Self::default_polynomial() }
    }
    /// `exp(-(x-0.5)²/(2·0.08²))`
    pub fn gaussian() -> Self {
        IcProfile::Gaussian { amplitude: 1.0, center: 0.5, width: Self::default_width() }
    }
    /// `sin(πx)`
    pub fn sine() -> Self {
        IcProfile::Sine { terms: Self::default_sine_terms() }
    }
    /// `sin(πx) + 0.5 sin(4πx)`
    pub fn sine_mix() -> Self {
        IcProfile::SineMix { terms: Self::default_sine_mix_terms() }
    }
    pub fn gaussian_mix() -> Self {
        IcProfile::GaussianMix { bumps: Self::default_gaussian_mix() }
    }
    /// Indicator of `(0.25, 0.75]`.
    pub fn step() -> Self {
        IcProfile::Step { jumps: Self::default_jumps(), level: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IcProfile::Polynomial { .. } => "polynomial",
            IcProfile::Gaussian { .. } => "gaussian",
            IcProfile::Sine { .. } => "sine",
            IcProfile::SineMix { .. } => "sine_mix",
            IcProfile::GaussianMix { .. } => "gaussian_mix",
            IcProfile::Step { .. } => "step",
            IcProfile::Constant { .. } => "constant",
        }
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("{} profile: {msg}", self.name())));
        match self {
            IcProfile::Polynomial { coefficients } if coefficients.is_empty() => {
                bad("needs at least one coefficient".into())
            }
            IcProfile::Gaussian { width, .. } if !(*width > 0.0) => bad("width must be positive".into()),
            IcProfile::GaussianMix { bumps } if bumps.iter().any(|b| !(b.width > 0.0)) => {
                bad("widths must be positive".into())
            }
            IcProfile::Sine { terms } | IcProfile::SineMix { terms } if terms.is_empty() => {
                bad("needs at least one term".into())
            }
            IcProfile::Step { jumps, .. } => {
                let inside = jumps.iter().all(|&j| j > domain.x_min && j < domain.x_max);
                let sorted = jumps.windows(2).all(|w| w[0] < w[1]);
                if !(1..=2).contains(&jumps.len()) || !inside || !sorted {
                    bad(format!("needs one or two increasing jumps strictly inside the domain, got {jumps:?}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// `u_0(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            IcProfile::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            IcProfile::Gaussian { amplitude, center, width } => gaussian(x, *amplitude, *center, *width),
            IcProfile::Sine { terms } | IcProfile::SineMix { terms } => {
                terms.iter().map(|s| s.amplitude * (s.frequency * PI * x).sin()).sum()
            }
            IcProfile::GaussianMix { bumps } => {
                bumps.iter().map(|b| gaussian(x, b.amplitude, b.center, b.width)).sum()
            }
            IcProfile::Step { jumps, level } => match jumps.as_slice() {
                [j] if x <= *j => *level,
                [a, b] if x > *a && x <= *b => *level,
                _ => 0.0,
            },
            IcProfile::Constant { value } => *value,
        }
    }

    /// Upper bound on `|u_0|` over the unit interval from the declared
    /// amplitudes (coefficients, for the polynomial).
    pub fn amplitude_bound(&self) -> f64 {
        match self {
            IcProfile::Polynomial { coefficients } => coefficients.iter().map(|c| c.abs()).sum(),
            IcProfile::Gaussian { amplitude, .. } => amplitude.abs(),
            IcProfile::Sine { terms } | IcProfile::SineMix { terms } => {
                terms.iter().map(|s| s.amplitude.abs()).sum()
            }
            IcProfile::GaussianMix { bumps } => bumps.iter().map(|b| b.amplitude.abs()).sum(),
            IcProfile::Step { level, .. } => level.abs(),
            IcProfile::Constant { value } => value.abs(),
        }
    }
}

fn gaussian(x: f64, amplitude: f64, center: f64, width: f64) -> f64 {
    let z = (x - center) / width;
    amplitude * (-0.5 * z * z).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentId {
    InitialLine,
    InitialVelocityLine,
    LeftEdge,
    RightEdge,
}

impl ComponentId {
    pub fn name(self) -> &'static str {
        match self {
            ComponentId::InitialLine => "initial",
            ComponentId::InitialVelocityLine => "initial_velocity",
            ComponentId::LeftEdge => "left",
            ComponentId::RightEdge => "right",
        }
    }

    /// Whether the component is parametrized by `x` (horizontal) or `t`.
    pub fn is_horizontal(self) -> bool {
        matches!(self, ComponentId::InitialLine | ComponentId::InitialVelocityLine)
    }
}

/// Which quantity a boundary row prescribes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Value,
    TimeDerivative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Profile(IcProfile),
    Constant(f64),
}

impl Target {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Target::Profile(p) => p.eval(x),
            Target::Constant(c) => *c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryComponent {
    pub id: ComponentId,
    pub kind: ConditionKind,
    pub target: Target,
}

impl BoundaryComponent {
    /// Maps the segment coordinate `s ∈ [0, 1]` to a point of the component.
    pub fn point_at(&self, domain: &Domain, s: f64) -> [f64; 2] {
        match self.id {
            ComponentId::InitialLine | ComponentId::InitialVelocityLine => {
                [domain.x_min + s * domain.width(), domain.t_min]
            }
            ComponentId::LeftEdge => [domain.x_min, domain.t_min + s * domain.duration()],
            ComponentId::RightEdge => [domain.x_max, domain.t_min + s * domain.duration()],
        }
    }

    /// Exact geometric membership test.
    pub fn contains(&self, domain: &Domain, p: [f64; 2]) -> bool {
        let [x, t] = p;
        match self.id {
            ComponentId::InitialLine | ComponentId::InitialVelocityLine => {
                t == domain.t_min && x >= domain.x_min && x <= domain.x_max
            }
            ComponentId::LeftEdge => x == domain.x_min && t >= domain.t_min && t <= domain.t_max,
            ComponentId::RightEdge => x == domain.x_max && t >= domain.t_min && t <= domain.t_max,
        }
    }

    pub fn target_at(&self, p: [f64; 2]) -> f64 {
        self.target.eval(p[0])
    }
}

/// A PDE on a rectangle together with its initial/boundary conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IbvpProblem {
    pub pde: PdeKind,
    pub domain: Domain,
    pub profile: IcProfile,
    pub components: Vec<BoundaryComponent>,
}

/// Builds the standard heat or wave IBVP for an initial profile.
///
/// Heat edges hold the profile's endpoint values; wave edges are clamped to
/// zero and the initial velocity vanishes.
pub fn build_problem(pde: PdeKind, profile: IcProfile, domain: Domain) -> Result<IbvpProblem> {
    domain.validate()?;
    profile.validate(&domain)?;
    let initial = BoundaryComponent {
        id: ComponentId::InitialLine,
        kind: ConditionKind::Value,
        target: Target::Profile(profile.clone()),
    };
    let edge = |id, value| BoundaryComponent { id, kind: ConditionKind::Value, target: Target::Constant(value) };
    let components = match pde {
        PdeKind::Heat => vec![
            initial,
            edge(ComponentId::LeftEdge, profile.eval(domain.x_min)),
            edge(ComponentId::RightEdge, profile.eval(domain.x_max)),
        ],
        PdeKind::Wave => {
            if matches!(profile, IcProfile::Step { ref jumps, .. } if jumps.len() == 1) {
                return Err(Error::Config(
                    "wave problems clamp both edges to zero; a single-jump step is incompatible".into(),
                ));
            }
            vec![
                initial,
                BoundaryComponent {
                    id: ComponentId::InitialVelocityLine,
                    kind: ConditionKind::TimeDerivative,
                    target: Target::Constant(0.0),
                },
                edge(ComponentId::LeftEdge, 0.0),
                edge(ComponentId::RightEdge, 0.0),
            ]
        }
    };
    Ok(IbvpProblem { pde, domain, profile, components })
}

impl IbvpProblem {
    /// Half of the budget on the initial line(s), the rest split over edges.
    pub fn default_allocation(&self) -> Vec<f64> {
        match self.pde {
            PdeKind::Heat => vec![0.5, 0.25, 0.25],
            PdeKind::Wave => vec![0.375, 0.125, 0.25, 0.25],
        }
    }

    pub fn component(&self, id: ComponentId) -> Option<&BoundaryComponent> {
        self.components.iter().find(|c| c.id == id)
    }
}

/// Collocation points on the boundary with their targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub points: Vec<[f64; 2]>,
    pub targets: Vec<f64>,
    pub kinds: Vec<ConditionKind>,
    pub component_ids: Vec<ComponentId>,
    /// Per-row multiplier applied to both targets and design rows
    /// (square root of the component weight). All ones unless weights were
    /// requested.
    pub row_scale: Vec<f64>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, id: ComponentId) -> usize {
        self.component_ids.iter().filter(|&&c| c == id).count()
    }

    /// Targets multiplied by the row scale.
    pub fn scaled_targets(&self) -> Vec<f64> {
        self.targets.iter().zip(&self.row_scale).map(|(y, s)| y * s).collect()
    }

    /// Applies per-component weights `w_k`; rows are scaled by `sqrt(w_k)`.
    pub fn with_component_weights(mut self, problem: &IbvpProblem, weights: &[f64]) -> Result<Self> {
        if weights.len() != problem.components.len() || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Config(format!(
                "need {} positive component weights, got {weights:?}",
                problem.components.len()
            )));
        }
        for (scale, id) in self.row_scale.iter_mut().zip(&self.component_ids) {
            let k = problem.components.iter().position(|c| c.id == *id).expect("row from problem");
            *scale = weights[k].sqrt();
        }
        Ok(self)
    }
}

/// Splits `total` by `fractions` with the largest-remainder rule.
pub fn allocate(total: usize, fractions: &[f64]) -> Result<Vec<usize>> {
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|f| !(*f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("allocation fractions must be non-negative and sum to 1, got {fractions:?}")));
    }
    let exact: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| (e + 1e-9).floor() as usize).collect();
    let mut short = total.saturating_sub(counts.iter().sum());
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - counts[a] as f64;
        let rb = exact[b] - counts[b] as f64;
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if short == 0 {
            break;
        }
        counts[k] += 1;
        short -= 1;
    }
    Ok(counts)
}

/// Draws `total` collocation points uniformly on the boundary components.
///
/// Component `k` receives its share of `allocation`; the draws are fully
/// determined by `seed`.
pub fn sample_training_set(problem: &IbvpProblem, total: usize, allocation: &[f64], seed: u64) -> Result<TrainingSet> {
    let r = problem.components.len();
    if allocation.len() != r {
        return Err(Error::Config(format!("allocation has {} entries but the problem has {r} components", allocation.len())));
    }
    if total < r {
        return Err(Error::Config(format!("need at least {r} collocation points, got {total}")));
    }
    let counts = allocate(total, allocation)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = TrainingSet {
        points: Vec::with_capacity(total),
        targets: Vec::with_capacity(total),
        kinds: Vec::with_capacity(total),
        component_ids: Vec::with_capacity(total),
        row_scale: vec![1.0; total],
    };
    for (component, &n) in problem.components.iter().zip(&counts) {
        for _ in 0..n {
            let s: f64 = rng.random();
            let p = component.point_at(&problem.domain, s);
            set.points.push(p);
            set.targets.push(component.target_at(p));
            set.kinds.push(component.kind);
            set.component_ids.push(component.id);
        }
    }
    Ok(set)
}
