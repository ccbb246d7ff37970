//! Numeric checks that transformed seeds, catalog families and trained
//! models solve their PDE.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use lieibvp::bases::{default_catalog, BaseFamily, Which};
use lieibvp::geometry::{Domain, PdeKind};
use lieibvp::solver::Model;
use lieibvp::symmetry::{apply_transform, pde_residual_scaled, LieTransform, Seed, SolutionFn, TransformKind};

/// Stencil step of the residual checks.
pub const FD_STEP: f64 = 3e-5;
/// Interior margin; keeps the stencils inside the domain.
pub const MARGIN: f64 = 3e-4;
pub const RESIDUAL_TOL: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// How much work the checks do.
#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    /// Random parameter draws per family.
    pub draws: usize,
    /// Residual grid is `grid × grid` interior points.
    pub grid: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { draws: 100, grid: 50, seed: 0 }
    }
}

fn seed_for(pde: PdeKind) -> Seed {
    match pde {
        PdeKind::Heat => Seed::HeatMode,
        PdeKind::Wave => Seed::BlobPair,
    }
}

fn jet_gap(a: &impl SolutionFn, b: &impl SolutionFn, pts: &[[f64; 2]]) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for &[x, t] in pts {
        let (p, q) = (a.jet(x, t).map_err(|e| e.to_string())?, b.jet(x, t).map_err(|e| e.to_string())?);
        let scale = 1.0 + q.value.abs().max(q.dx.abs()).max(q.dt.abs());
        let gap = (p.value - q.value).abs().max((p.dx - q.dx).abs()).max((p.dt - q.dt).abs()) / scale;
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// Largest scaled gap between jet partials and fourth-order differences of
/// the value.
fn derivative_gap(f: &impl SolutionFn, pts: &[[f64; 2]]) -> Result<f64, String> {
    let h = FD_STEP;
    let v = |x, t| f.value(x, t).map_err(|e| e.to_string());
    let mut worst = 0.0f64;
    for &[x, t] in pts {
        let j = f.jet(x, t).map_err(|e| e.to_string())?;
        let dx = (-v(x + 2.0 * h, t)? + 8.0 * v(x + h, t)? - 8.0 * v(x - h, t)? + v(x - 2.0 * h, t)?) / (12.0 * h);
        let dt = (-v(x, t + 2.0 * h)? + 8.0 * v(x, t + h)? - 8.0 * v(x, t - h)? + v(x, t - 2.0 * h)?) / (12.0 * h);
        let scale = 1.0 + j.dx.abs().max(j.dt.abs()).max(j.value.abs());
        worst = worst.max((dx - j.dx).abs().max((dt - j.dt).abs()) / scale);
    }
    Ok(worst)
}

fn residual_of(pde: PdeKind, f: &impl SolutionFn, grid: &[[f64; 2]]) -> Result<f64, String> {
    let err = RefCell::new(None);
    let r = pde_residual_scaled(
        pde,
        |x, t| match f.value(x, t) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e.to_string());
                f64::NAN
            }
        },
        grid,
        FD_STEP,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

/// Draws from `shrink` times the parameter range around zero, so that a sum
/// of two draws stays in range when `shrink <= 0.5`.
fn draw(tr: &LieTransform, rng: &mut ChaCha8Rng, shrink: f64) -> f64 {
    let (lo, hi) = (tr.lower.min(0.0) * shrink, tr.upper.max(0.0) * shrink);
    lo + (hi - lo) * rng.random::<f64>()
}

/// Identity, group law, PDE residual and derivative checks for one
/// transform on its standard bounds.
pub fn transform_checks(kind: TransformKind, seed: u64) -> Vec<Check> {
    let pde = kind.pde();
    let domain = Domain::default_for(pde);
    let tr = LieTransform::standard(kind, &domain);
    let base = seed_for(pde);
    let pts = domain.interior_grid(6, 6, 2.0 * MARGIN);
    let grid = domain.interior_grid(15, 15, MARGIN);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ kind as u64);
    let name = kind.name();
    let mut out = Vec::new();

    let identity = apply_transform(&tr, base, 0.0).map_err(|e| e.to_string()).and_then(|f| jet_gap(&f, &base, &pts));
    out.push(match identity {
        Ok(g) => Check::new(format!("{name} identity"), g < 1e-12, format!("max gap {g:.2e}")),
        Err(e) => Check::new(format!("{name} identity"), false, e),
    });

    let mut worst = (0.0f64, 0.0, 0.0);
    let mut failure = None;
    for _ in 0..10 {
        let (a, b) = (draw(&tr, &mut rng, 0.4), draw(&tr, &mut rng, 0.4));
        let gap = apply_transform(&tr, base, a)
            .and_then(|fa| apply_transform(&tr, fa, b))
            .map_err(|e| e.to_string())
            .and_then(|fab| {
                let f = apply_transform(&tr, base, a + b).map_err(|e| e.to_string())?;
                jet_gap(&fab, &f, &pts)
            });
        match gap {
            Ok(g) if g > worst.0 => worst = (g, a, b),
            Ok(_) => {}
            Err(e) => failure = Some(format!("theta = ({a}, {b}): {e}")),
        }
    }
    out.push(match failure {
        Some(e) => Check::new(format!("{name} group law"), false, e),
        None => Check::new(
            format!("{name} group law"),
            worst.0 < 1e-9,
            format!("max gap {:.2e} at theta = ({}, {})", worst.0, worst.1, worst.2),
        ),
    });

    let mut res = Ok((0.0f64, 0.0));
    for _ in 0..10 {
        let theta = draw(&tr, &mut rng, 1.0);
        let r = apply_transform(&tr, base, theta).map_err(|e| e.to_string()).and_then(|f| residual_of(pde, &f, &grid));
        res = match (res, r) {
            (Ok((w, _)), Ok(r)) if r > w || !r.is_finite() => Ok((r, theta)),
            (Ok(w), Ok(_)) => Ok(w),
            (Ok(_), Err(e)) => Err(format!("theta = {theta}: {e}")),
            (Err(e), _) => Err(e),
        };
    }
    out.push(match res {
        Ok((r, theta)) => Check::new(
            format!("{name} pde residual"),
            r < RESIDUAL_TOL,
            format!("max scaled residual {r:.2e} at theta = {theta}"),
        ),
        Err(e) => Check::new(format!("{name} pde residual"), false, e),
    });

    let theta = draw(&tr, &mut rng, 1.0);
    let d = apply_transform(&tr, base, theta).map_err(|e| e.to_string()).and_then(|f| derivative_gap(&f, &pts));
    out.push(match d {
        Ok(g) => Check::new(format!("{name} derivatives"), g < 1e-6, format!("max gap {g:.2e} at theta = {theta}")),
        Err(e) => Check::new(format!("{name} derivatives"), false, format!("theta = {theta}: {e}")),
    });
    out
}

struct Member<'a> {
    family: &'a BaseFamily,
    params: &'a [f64],
}

impl SolutionFn for Member<'_> {
    fn jet(&self, x: f64, t: f64) -> lieibvp::Result<lieibvp::symmetry::Jet> {
        self.family.chain(self.params)?.eval(x, t)
    }
    fn value(&self, x: f64, t: f64) -> lieibvp::Result<f64> {
        self.family.eval_point(self.params, x, t, Which::Value)
    }
}

/// Parameter vectors for a family: all-lower and all-upper corners, then
/// `draws` random draws from its sampler.
fn family_draws(family: &BaseFamily, draws: usize, seed: u64) -> Result<Vec<Vec<f64>>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![family.lower_bounds(), family.upper_bounds()];
    params.extend(family.sample_params(draws.max(1), &mut rng).map_err(|e| e.to_string())?);
    Ok(params)
}

/// Residual, time-derivative and bounds checks for a family on `domain`.
/// Failures name the offending parameter vector.
pub fn family_checks(family: &BaseFamily, domain: &Domain, cfg: &VerifyConfig) -> Vec<Check> {
    let id = &family.id;
    let params = match family_draws(family, cfg.draws, cfg.seed) {
        Ok(p) => p,
        Err(e) => return vec![Check::new(format!("{id} sampling"), false, e)],
    };
    let mut out = Vec::new();

    let in_bounds = params.iter().all(|p| family.check_params(p).is_ok());
    out.push(Check::new(format!("{id} draws in bounds"), in_bounds, format!("{} vectors", params.len())));

    let grid = domain.interior_grid(cfg.grid, cfg.grid, MARGIN);
    let results: Vec<(usize, Result<f64, String>)> = params
        .par_iter()
        .enumerate()
        .map(|(i, p)| (i, residual_of(family.pde, &Member { family, params: p }, &grid)))
        .collect();
    let bad = results.iter().find(|(_, r)| !matches!(r, Ok(v) if *v < RESIDUAL_TOL));
    out.push(match bad {
        Some((i, r)) => {
            let why = match r {
                Ok(v) => format!("scaled residual {v:.2e}"),
                Err(e) => e.clone(),
            };
            Check::new(format!("{id} pde residual"), false, format!("family {id}, theta = {:?}: {why}", params[*i]))
        }
        None => {
            let worst = results.iter().filter_map(|(_, r)| r.as_ref().ok()).fold(0.0f64, |a, &b| a.max(b));
            Check::new(
                format!("{id} pde residual"),
                true,
                format!("{} draws, max scaled residual {worst:.2e}", params.len()),
            )
        }
    });

    let pts = domain.interior_grid(8, 8, 2.0 * MARGIN);
    let mut worst = 0.0f64;
    let mut failure = None;
    for p in params.iter().take(12) {
        match derivative_gap(&Member { family, params: p }, &pts) {
            Ok(g) => worst = worst.max(g),
            Err(e) => {
                failure = Some(format!("family {id}, theta = {p:?}: {e}"));
                break;
            }
        }
    }
    out.push(match failure {
        Some(e) => Check::new(format!("{id} derivatives"), false, e),
        None => Check::new(format!("{id} derivatives"), worst < 1e-5, format!("max scaled gap {worst:.2e}")),
    });
    out
}

/// Scaled PDE residual of a trained model on an interior grid.
pub fn model_residual(model: &Model, grid_n: usize) -> Result<f64, String> {
    struct Sum<'a>(&'a Model);
    impl SolutionFn for Sum<'_> {
        fn jet(&self, x: f64, t: f64) -> lieibvp::Result<lieibvp::symmetry::Jet> {
            let mut j = lieibvp::symmetry::Jet::default();
            for term in &self.0.terms {
                let k = term.family.chain(&term.params)?.eval(x, t)?;
                j.value += term.amplitude * k.value;
                j.dx += term.amplitude * k.dx;
                j.dt += term.amplitude * k.dt;
            }
            Ok(j)
        }
        fn value(&self, x: f64, t: f64) -> lieibvp::Result<f64> {
            self.0
                .terms
                .iter()
                .try_fold(0.0, |acc, term| Ok(acc + term.amplitude * term.family.eval_point(&term.params, x, t, Which::Value)?))
        }
    }
    let grid = model.domain.interior_grid(grid_n, grid_n, MARGIN);
    let rows: Vec<Result<f64, String>> =
        grid.par_chunks(grid_n).map(|row| residual_of(model.pde, &Sum(model), row)).collect();
    rows.into_iter().try_fold(0.0f64, |a, r| Ok(a.max(r?)))
}

/// The full suite: every transform, then every family of `catalog` (the
/// default catalogs when `None`).
pub fn verify_all(catalog: Option<(&[BaseFamily], Domain)>, cfg: &VerifyConfig) -> Vec<Check> {
    let mut out: Vec<Check> = TransformKind::ALL.iter().flat_map(|&k| transform_checks(k, cfg.seed)).collect();
    match catalog {
        Some((families, domain)) => {
            for f in families {
                out.extend(family_checks(f, &domain, cfg));
            }
        }
        None => {
            for pde in [PdeKind::Heat, PdeKind::Wave] {
                let domain = Domain::default_for(pde);
                for f in default_catalog(pde) {
                    out.extend(family_checks(&f, &domain, cfg));
                }
            }
        }
    }
    out
}
