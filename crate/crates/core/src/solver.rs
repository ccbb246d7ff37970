//! The greedy fit: score sampled candidates against the current residual,
//! add the best one, re-solve the amplitudes, and periodically refine all
//! nonlinear parameters jointly.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bases::{BaseFamily, Which};
use crate::error::{Error, Result};
use crate::geometry::{Domain, IbvpProblem, PdeKind, TrainingSet};
use crate::linalg::{cosine_score_with_norm, dot, norm, ridge_solve, DesignMatrix};
use crate::nlls::{refine, TrustRegionConfig, VarProObjective};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Stop once the pooled boundary MSE is at or below this.
    pub mse_tol: f64,
    pub max_terms: usize,
    /// Parameter draws per family per addition.
    pub candidates: usize,
    /// Additions between global refinements.
    pub refine_every: usize,
    /// Ridge weight on the amplitudes.
    pub lambda: f64,
    /// Seed of the candidate sampler.
    pub seed: u64,
    pub trust_region: TrustRegionConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mse_tol: 1e-6,
            max_terms: 80,
            candidates: 1000,
            refine_every: 5,
            lambda: 0.1,
            seed: 0,
            trust_region: TrustRegionConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_terms == 0 || self.candidates == 0 || self.refine_every == 0 {
            return Err(Error::Config("max_terms, candidates and refine_every must be at least 1".into()));
        }
        if !(self.mse_tol > 0.0) {
            return Err(Error::Config(format!("mse_tol must be positive, got {}", self.mse_tol)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be finite and non-negative, got {}", self.lambda)));
        }
        self.trust_region.validate()
    }
}

/// Hex SHA-256 of the JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("configuration serializes");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

/// One addition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Active-set size after this addition.
    pub step: usize,
    pub family: String,
    pub score: f64,
    /// Pooled MSE after the amplitude solve.
    pub mse: f64,
    /// `‖r‖² + λ‖a‖²` after the amplitude solve.
    pub objective: f64,
    /// Whether a global refinement followed this addition.
    pub refined: bool,
    pub mse_refined: Option<f64>,
    pub objective_refined: Option<f64>,
    /// Seconds since the start of the fit.
    pub elapsed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Tolerance,
    MaxTerms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// MSE of the empty model, i.e. the mean squared target.
    pub initial_mse: f64,
    pub records: Vec<TraceRecord>,
    pub stop: StopReason,
    /// Refinements that were abandoned, with the reason.
    pub warnings: Vec<String>,
}

impl FitTrace {
    /// MSE of the final model.
    pub fn final_mse(&self) -> f64 {
        match self.records.last() {
            None => self.initial_mse,
            Some(r) => r.mse_refined.unwrap_or(r.mse),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub family: BaseFamily,
    pub params: Vec<f64>,
    pub amplitude: f64,
}

/// `Σ aᵢ fᵢ(x, t; θᵢ)`; every term solves the PDE exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub pde: PdeKind,
    pub domain: Domain,
    pub terms: Vec<Term>,
    pub config_hash: String,
    pub seed: u64,
}

impl Model {
    pub fn empty(pde: PdeKind, domain: Domain) -> Self {
        Model { pde, domain, terms: Vec::new(), config_hash: String::new(), seed: 0 }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.amplitude).collect()
    }

    /// Total nonlinear parameter count.
    pub fn nonlinear_param_count(&self) -> usize {
        self.terms.iter().map(|t| t.params.len()).sum()
    }

    /// Amplitudes plus nonlinear parameters.
    pub fn param_count(&self) -> usize {
        self.len() + self.nonlinear_param_count()
    }

    /// Structural checks after loading: families, bounds and parameter
    /// counts.
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        for t in &self.terms {
            if t.family.pde != self.pde {
                return Err(Error::Config(format!("term family {} is not a {} family", t.family.id, self.pde.name())));
            }
            t.family.validate(&self.domain)?;
            t.family.check_params(&t.params)?;
            if !t.amplitude.is_finite() {
                return Err(Error::Config(format!("term {} has a non-finite amplitude", t.family.id)));
            }
        }
        Ok(())
    }

    fn check_points(&self, points: &[[f64; 2]]) -> Result<()> {
        match points.iter().find(|p| !self.domain.contains(p[0], p[1])) {
            Some(p) => Err(Error::Domain(format!("point ({}, {}) lies outside {:?}", p[0], p[1], self.domain))),
            None => Ok(()),
        }
    }

    /// The model (or its `t`/`x` derivative) at each point.
    pub fn predict(&self, points: &[[f64; 2]], which: Which) -> Result<Vec<f64>> {
        self.check_points(points)?;
        points
            .par_iter()
            .map(|&[x, t]| {
                self.terms.iter().try_fold(0.0, |acc, term| {
                    Ok(acc + term.amplitude * term.family.eval_point(&term.params, x, t, which)?)
                })
            })
            .collect()
    }

    /// `aᵢ fᵢ` at each point, one vector per term.
    pub fn term_contributions(&self, points: &[[f64; 2]], which: Which) -> Result<Vec<Vec<f64>>> {
        self.check_points(points)?;
        self.terms
            .iter()
            .map(|term| {
                Ok(term.family.eval_batch(&term.params, points, which)?.into_iter().map(|v| term.amplitude * v).collect())
            })
            .collect()
    }

    /// Design matrix of the active set on a training set.
    pub fn design_matrix(&self, set: &TrainingSet) -> Result<DesignMatrix> {
        let cols: Vec<Vec<f64>> =
            self.terms.iter().map(|t| t.family.design_column(&t.params, set)).collect::<Result<_>>()?;
        Ok(DesignMatrix::from_columns(set.len(), &cols))
    }

    /// Pooled (row-scaled) MSE against a training set.
    pub fn ibc_mse(&self, set: &TrainingSet) -> Result<f64> {
        let f = self.design_matrix(set)?;
        let (_, mse) = crate::linalg::residual(&set.scaled_targets(), &f, &self.amplitudes());
        Ok(mse)
    }

    /// Closed-form expression in `x` and `t`, amplitudes to 6 significant
    /// digits. Uses `sin`, `cos`, `exp`, `^` and the usual operators.
    ///
    /// ```
    /// use lieibvp::geometry::{Domain, PdeKind};
    /// use lieibvp::solver::Model;
    ///
    /// assert_eq!(Model::empty(PdeKind::Heat, Domain::heat_default()).render_symbolic(), "0");
    /// ```
    pub fn render_symbolic(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(|t| format!("({:.5e})*{}", t.amplitude, t.family.render(&t.params)))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Model = serde_json::from_str(text).map_err(|e| Error::Config(format!("model file: {e}")))?;
        model.validate()?;
        Ok(model)
    }
}

/// Everything [`fit`] produces.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: Model,
    pub trace: FitTrace,
    /// Wall time of the fit in seconds.
    pub runtime: f64,
}

struct State {
    families: Vec<BaseFamily>,
    theta: Vec<f64>,
    design: DesignMatrix,
    amplitudes: Vec<f64>,
    residual: Vec<f64>,
    mse: f64,
    objective: f64,
}

impl State {
    fn resolve(&mut self, y: &[f64], lambda: f64) -> Result<()> {
        self.amplitudes = ridge_solve(&self.design, y, lambda)?;
        let fa = self.design.apply(&self.amplitudes);
        self.residual = y.iter().zip(fa).map(|(y, p)| y - p).collect();
        let ss = dot(&self.residual, &self.residual);
        self.mse = ss / y.len() as f64;
        self.objective = ss + lambda * dot(&self.amplitudes, &self.amplitudes);
        if !self.mse.is_finite() || !self.objective.is_finite() {
            return Err(Error::SolverAbort(format!("non-finite MSE after {} additions", self.families.len())));
        }
        Ok(())
    }
}

/// Fits a model to the boundary data in `set`.
///
/// Each addition samples `candidates` parameter vectors per family, scores
/// every candidate column by its absolute cosine with the current residual,
/// and appends the best one (lowest family, then lowest draw, on ties).
/// After every `refine_every` additions all nonlinear parameters are
/// refined jointly. The loop ends as soon as the MSE reaches `mse_tol` or
/// the active set reaches `max_terms`.
pub fn fit(problem: &IbvpProblem, set: &TrainingSet, catalog: &[BaseFamily], cfg: &SolverConfig) -> Result<FitOutcome> {
    let start = Instant::now();
    cfg.validate()?;
    if catalog.is_empty() {
        return Err(Error::Config("the base catalog is empty".into()));
    }
    if set.is_empty() {
        return Err(Error::Config("the training set is empty".into()));
    }
    for f in catalog {
        if f.pde != problem.pde {
            return Err(Error::Config(format!("family {} does not belong to the {} equation", f.id, problem.pde.name())));
        }
        f.validate(&problem.domain)?;
    }
    let y = set.scaled_targets();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ss = dot(&y, &y);
    let mut st = State {
        families: Vec::new(),
        theta: Vec::new(),
        design: DesignMatrix::empty(set.len()),
        amplitudes: Vec::new(),
        residual: y.clone(),
        mse: ss / y.len() as f64,
        objective: ss,
    };
    if !st.mse.is_finite() {
        return Err(Error::SolverAbort("training targets are not finite".into()));
    }
    let mut trace = FitTrace { initial_mse: st.mse, records: Vec::new(), stop: StopReason::Tolerance, warnings: Vec::new() };

    'outer: loop {
        if st.mse <= cfg.mse_tol {
            trace.stop = StopReason::Tolerance;
            break;
        }
        if st.families.len() >= cfg.max_terms {
            trace.stop = StopReason::MaxTerms;
            break;
        }
        for _ in 0..cfg.refine_every {
            let (family, params, score) = best_candidate(catalog, set, &st.residual, cfg.candidates, &mut rng)?;
            let column = catalog[family].design_column(&params, set)?;
            st.design.push_column(&column);
            st.families.push(catalog[family].clone());
            st.theta.extend_from_slice(&params);
            st.resolve(&y, cfg.lambda)?;
            trace.records.push(TraceRecord {
                step: st.families.len(),
                family: catalog[family].id.clone(),
                score,
                mse: st.mse,
                objective: st.objective,
                refined: false,
                mse_refined: None,
                objective_refined: None,
                elapsed: start.elapsed().as_secs_f64(),
            });
            if st.mse <= cfg.mse_tol {
                trace.stop = StopReason::Tolerance;
                break 'outer;
            }
            if st.families.len() >= cfg.max_terms {
                trace.stop = StopReason::MaxTerms;
                break 'outer;
            }
        }
        let obj = VarProObjective::new(set, st.families.clone(), cfg.lambda)?;
        let out = refine(&obj, &st.theta, &cfg.trust_region)?;
        if let Some(w) = out.warning {
            trace.warnings.push(format!("after {} terms: {w}", st.families.len()));
        }
        let p = out.point;
        st.design = p.design().clone();
        st.theta = p.theta;
        st.amplitudes = p.amplitudes;
        st.residual = p.residual;
        st.mse = p.mse;
        st.objective = p.objective;
        let last = trace.records.last_mut().expect("refinement follows an addition");
        last.refined = true;
        last.mse_refined = Some(st.mse);
        last.objective_refined = Some(st.objective);
        last.elapsed = start.elapsed().as_secs_f64();
    }

    let mut terms = Vec::with_capacity(st.families.len());
    let mut off = 0;
    for (family, &amplitude) in st.families.into_iter().zip(&st.amplitudes) {
        let n = family.param_count();
        terms.push(Term { params: st.theta[off..off + n].to_vec(), family, amplitude });
        off += n;
    }
    let model = Model { pde: problem.pde, domain: problem.domain, terms, config_hash: config_hash(cfg), seed: cfg.seed };
    Ok(FitOutcome { model, trace, runtime: start.elapsed().as_secs_f64() })
}

/// Samples and scores one round of candidates; returns the winning family
/// index, its parameters and its score.
fn best_candidate(
    catalog: &[BaseFamily],
    set: &TrainingSet,
    residual: &[f64],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(usize, Vec<f64>, f64)> {
    let rn = norm(residual);
    if rn == 0.0 {
        return Err(Error::ZeroResidual);
    }
    let mut draws = Vec::with_capacity(catalog.len() * count);
    for (i, f) in catalog.iter().enumerate() {
        draws.extend(f.sample_params(count, rng)?.into_iter().map(|p| (i, p)));
    }
    let scores: Vec<f64> = draws
        .par_iter()
        .map(|(i, p)| match catalog[*i].design_column(p, set) {
            Ok(col) => cosine_score_with_norm(residual, rn, &col),
            Err(_) => 0.0,
        })
        .collect();
    let best = argmax(&scores);
    if !(scores[best] > 0.0) {
        return Err(Error::SolverAbort(
            "every candidate scored zero; the residual is orthogonal to all sampled bases".into(),
        ));
    }
    let (i, p) = draws.swap_remove(best);
    Ok((i, p, scores[best]))
}

/// Index of the largest value, the first one on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_problem, sample_training_set, IcProfile};
    use crate::linalg::stationarity;
    use crate::symmetry::pde_residual_scaled;
    use std::collections::HashMap;

    fn heat_problem(profile: IcProfile) -> IbvpProblem {
        build_problem(PdeKind::Heat, profile, Domain::heat_default()).unwrap()
    }

    fn small_cfg() -> SolverConfig {
        SolverConfig { candidates: 200, ..Default::default() }
    }

    #[test]
    fn argmax_takes_first_of_ties() {
        assert_eq!(argmax(&[0.1, 0.5, 0.5, 0.2]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig { mse_tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { candidates: 0, ..Default::default() }.validate().is_err());
        assert!(SolverConfig { lambda: -1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = config_hash(&SolverConfig::default());
        assert_eq!(a, config_hash(&SolverConfig::default()));
        assert_eq!(a.len(), 64);
        assert_ne!(a, config_hash(&SolverConfig { seed: 1, ..Default::default() }));
    }

    #[test]
    fn zero_target_stops_immediately() {
        let problem = heat_problem(IcProfile::Constant { value: 0.0 });
        let set = sample_training_set(&problem, 300, &problem.default_allocation(), 0).unwrap();
        let out = fit(&problem, &set, &crate::bases::default_catalog(PdeKind::Heat), &small_cfg()).unwrap();
        assert!(out.model.is_empty());
        assert!(out.trace.records.is_empty());
        assert_eq!(out.trace.final_mse(), 0.0);
    }

    #[test]
    fn empty_catalog_is_a_config_error() {
        let problem = heat_problem(IcProfile::sine());
        let set = sample_training_set(&problem, 300, &problem.default_allocation(), 0).unwrap();
        assert!(matches!(fit(&problem, &set, &[], &small_cfg()), Err(Error::Config(_))));
        let wave = [BaseFamily::wave_standing()];
        assert!(matches!(fit(&problem, &set, &wave, &small_cfg()), Err(Error::Config(_))));
    }

    #[test]
    fn orthogonal_residual_aborts() {
        // Every rescaled sine mode without a phase shift vanishes at x = 0.
        let fam = BaseFamily::new(
            "pinned",
            PdeKind::Heat,
            crate::symmetry::Seed::HeatMode,
            vec![crate::symmetry::LieTransform::uniform(crate::symmetry::TransformKind::HeatT4, -1.0, 1.0)],
        );
        let problem = heat_problem(IcProfile::sine());
        let set = TrainingSet {
            points: vec![[0.0, 0.05]],
            targets: vec![1.0],
            kinds: vec![crate::geometry::ConditionKind::Value],
            component_ids: vec![crate::geometry::ComponentId::LeftEdge],
            row_scale: vec![1.0],
        };
        assert!(matches!(fit(&problem, &set, &[fam], &small_cfg()), Err(Error::SolverAbort(_))));
    }

    fn planted_set(problem: &IbvpProblem, terms: &[Term]) -> TrainingSet {
        let mut set = sample_training_set(problem, 600, &problem.default_allocation(), 3).unwrap();
        let model = Model { pde: problem.pde, domain: problem.domain, terms: terms.to_vec(), config_hash: String::new(), seed: 0 };
        for ((y, p), k) in set.targets.iter_mut().zip(&set.points).zip(&set.kinds) {
            *y = model.predict(&[*p], (*k).into()).unwrap()[0];
        }
        set
    }

    #[test]
    fn planted_single_base_is_recovered() {
        let problem = heat_problem(IcProfile::sine());
        let fam = BaseFamily::heat_sine_mode();
        let set = planted_set(&problem, &[Term { family: fam.clone(), params: vec![0.4, -(5.0f64).ln()], amplitude: 1.3 }]);
        let cfg = SolverConfig { mse_tol: 1e-12, lambda: 1e-8, max_terms: 10, candidates: 300, ..Default::default() };
        let out = fit(&problem, &set, &[fam], &cfg).unwrap();
        assert!(out.trace.final_mse() < 1e-10, "{:?}", out.trace);
        assert!(out.model.len() <= cfg.refine_every + 1);
    }

    #[test]
    fn fit_is_deterministic_and_trace_is_consistent() {
        let problem = heat_problem(IcProfile::gaussian());
        let set = sample_training_set(&problem, 400, &problem.default_allocation(), 1).unwrap();
        let catalog = crate::bases::default_catalog(PdeKind::Heat);
        let cfg = SolverConfig { max_terms: 7, candidates: 100, refine_every: 3, mse_tol: 1e-12, ..Default::default() };
        let a = fit(&problem, &set, &catalog, &cfg).unwrap();
        let b = fit(&problem, &set, &catalog, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        let strip = |t: &FitTrace| t.records.iter().map(|r| (r.step, r.family.clone(), r.mse, r.objective, r.mse_refined)).collect::<Vec<_>>();
        assert_eq!(strip(&a.trace), strip(&b.trace));
        assert_eq!(a.model.len(), 7);
        assert_eq!(a.trace.stop, StopReason::MaxTerms);
        assert!((a.model.ibc_mse(&set).unwrap() - a.trace.final_mse()).abs() <= 1e-12 * a.trace.initial_mse);

        // record k matches a run stopped after k additions
        for k in [1, 3, 5] {
            let short = fit(&problem, &set, &catalog, &SolverConfig { max_terms: k, ..cfg.clone() }).unwrap();
            let rec = &a.trace.records[k - 1];
            let mse = short.model.ibc_mse(&set).unwrap();
            assert!((mse - rec.mse).abs() <= 1e-12 * rec.mse.max(1e-300), "{k}: {mse} vs {}", rec.mse);
        }

        // objective non-increasing over additions, MSE over refinements
        let mut last_obj = f64::INFINITY;
        for r in &a.trace.records {
            assert!(r.objective <= last_obj * (1.0 + 1e-12));
            last_obj = r.objective_refined.unwrap_or(r.objective);
            if let Some(m) = r.mse_refined {
                assert!(m <= r.mse + 1e-14);
            }
        }
        let f = a.model.design_matrix(&set).unwrap();
        let (lhs, fty) = stationarity(&f, &set.scaled_targets(), &a.model.amplitudes(), cfg.lambda);
        assert!(lhs < 1e-8 * (1.0 + fty), "{lhs} {fty}");
    }

    #[test]
    fn trained_model_solves_the_pde() {
        let problem = heat_problem(IcProfile::gaussian());
        let set = sample_training_set(&problem, 400, &problem.default_allocation(), 1).unwrap();
        let cfg = SolverConfig { max_terms: 6, candidates: 100, ..Default::default() };
        let out = fit(&problem, &set, &crate::bases::default_catalog(PdeKind::Heat), &cfg).unwrap();
        let grid = problem.domain.interior_grid(20, 20, 3e-4);
        let m = &out.model;
        let r = pde_residual_scaled(PdeKind::Heat, |x, t| m.predict(&[[x, t]], Which::Value).unwrap()[0], &grid, 1e-4);
        assert!(r < 1e-5, "{r}");
    }

    fn sample_model() -> Model {
        let heat = [
            Term { family: BaseFamily::heat_sine_mode(), params: vec![0.2, -1.1], amplitude: 0.75 },
            Term { family: BaseFamily::heat_blob(), params: vec![37.0, 0.45], amplitude: -1.25 },
            Term { family: BaseFamily::heat_modulated_blob(), params: vec![-0.3, -2.0, 5.0, 0.6], amplitude: 0.5 },
        ];
        Model { pde: PdeKind::Heat, domain: Domain::heat_default(), terms: heat.to_vec(), config_hash: "x".into(), seed: 4 }
    }

    #[test]
    fn predict_is_linear_and_checks_the_domain() {
        let empty = Model::empty(PdeKind::Heat, Domain::heat_default());
        assert_eq!(empty.predict(&[[0.3, 0.05]], Which::Value).unwrap(), vec![0.0]);
        let fam = BaseFamily::heat_sine_mode();
        let one = Model { terms: vec![Term { family: fam.clone(), params: vec![0.1, -0.5], amplitude: 2.0 }], ..empty.clone() };
        let v = one.predict(&[[0.3, 0.05]], Which::DxValue).unwrap()[0];
        assert_eq!(v, 2.0 * fam.eval_point(&[0.1, -0.5], 0.3, 0.05, Which::DxValue).unwrap());
        assert!(matches!(one.predict(&[[1.5, 0.05]], Which::Value), Err(Error::Domain(_))));
        assert!(matches!(one.predict(&[[0.5, -0.1]], Which::Value), Err(Error::Domain(_))));
    }

    #[test]
    fn predict_matches_direct_summation() {
        let m = sample_model();
        let pts = m.domain.grid(9, 9);
        let pred = m.predict(&pts, Which::Value).unwrap();
        for (p, v) in pts.iter().zip(pred) {
            let mut s = 0.0;
            for t in &m.terms {
                s += t.amplitude * t.family.chain(&t.params).unwrap().eval(p[0], p[1]).unwrap().value;
            }
            assert!((v - s).abs() < 1e-12, "{v} vs {s}");
        }
        let parts = m.term_contributions(&pts, Which::Value).unwrap();
        assert_eq!(parts.len(), 3);
    }

    #[test]
    fn parameter_count_adds_amplitudes_and_chain_lengths() {
        assert_eq!(sample_model().param_count(), 3 + 2 + 2 + 4);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = sample_model();
        let back = Model::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let pts = m.domain.grid(5, 5);
        let a = m.predict(&pts, Which::Value).unwrap();
        let b = back.predict(&pts, Which::Value).unwrap();
        assert!(a.iter().zip(&b).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn loading_rejects_out_of_bounds_terms() {
        let mut m = sample_model();
        m.terms[1].params[0] = 1000.0;
        assert!(Model::from_json(&m.to_json()).is_err());
        assert!(Model::from_json("{ not json").is_err());
    }

    #[test]
    fn rendering_names_the_functions() {
        let m = Model { terms: vec![sample_model().terms[0].clone()], ..sample_model() };
        let s = m.render_symbolic();
        assert!(s.contains("sin") && s.contains("exp"), "{s}");
        assert!(s.contains("7.50000e-1"), "{s}");
    }

    #[test]
    fn rendered_expression_evaluates_to_the_model() {
        let mut models = vec![sample_model()];
        models.push(Model {
            pde: PdeKind::Wave,
            domain: Domain::wave_default(),
            terms: vec![
                Term { family: BaseFamily::wave_standing(), params: vec![0.3, 1.2], amplitude: 0.8 },
                Term { family: BaseFamily::wave_blob_pair(), params: vec![0.5, 0.25], amplitude: -0.6 },
            ],
            config_hash: String::new(),
            seed: 0,
        });
        for m in models {
            let expr: meval::Expr = m.render_symbolic().parse().unwrap();
            let f = expr.bind2("x", "t").unwrap();
            let pts = m.domain.interior_grid(10, 5, 1e-3);
            assert_eq!(pts.len(), 50);
            let pred = m.predict(&pts, Which::Value).unwrap();
            let scale = pred.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (p, v) in pts.iter().zip(pred) {
                let e = f(p[0], p[1]);
                assert!((e - v).abs() <= 1e-5 * scale.max(v.abs()), "{e} vs {v}");
            }
        }
    }

    #[test]
    fn velocity_rows_use_time_derivatives() {
        let problem = build_problem(PdeKind::Wave, IcProfile::sine(), Domain::wave_default()).unwrap();
        let set = sample_training_set(&problem, 400, &problem.default_allocation(), 0).unwrap();
        let cfg = SolverConfig { max_terms: 3, candidates: 100, ..Default::default() };
        let out = fit(&problem, &set, &crate::bases::default_catalog(PdeKind::Wave), &cfg).unwrap();
        let counts: HashMap<_, usize> = out.trace.records.iter().fold(HashMap::new(), |mut m, r| {
            *m.entry(r.family.clone()).or_default() += 1;
            m
        });
        assert!(!counts.is_empty());
        assert!(out.trace.final_mse() < 1e-3, "{}", out.trace.final_mse());
    }
}
