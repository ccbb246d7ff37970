//! One configured solve: sampling, fitting, reference comparison and
//! artifacts.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use lieibvp::bases::Which;
use lieibvp::geometry::{IbvpProblem, TrainingSet};
use lieibvp::reference::{build_reference, l2re, max_abs_error, FourierReference};
use lieibvp::solver::{config_hash, fit, FitOutcome, StopReason};
use lieibvp::Error;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output;

/// Per-term summary in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSummary {
    pub index: usize,
    pub family: String,
    /// Transform ids, innermost first.
    pub chain: Vec<String>,
    pub params: Vec<f64>,
    pub amplitude: f64,
    /// RMS of the weighted term over the collocation points.
    pub ibc_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub pde: String,
    pub profile: String,
    pub ibc_mse: f64,
    /// `None` when no reference exists for the problem.
    pub l2re: Option<f64>,
    /// Wall time of the fit alone.
    pub runtime_seconds: f64,
    pub terms: usize,
    /// Amplitudes plus nonlinear parameters.
    pub parameters: usize,
    pub nonlinear_parameters: usize,
    pub stop: StopReason,
    /// Largest `|model - reference|` on grid nodes of the parabolic
    /// boundary (initial line and edges).
    pub max_boundary_error: Option<f64>,
    /// Largest `|model - reference|` over the whole grid.
    pub max_domain_error: Option<f64>,
    /// Largest `|reference|` over the grid.
    pub reference_max: Option<f64>,
    pub config_hash: String,
    pub seed: u64,
    pub warnings: Vec<String>,
    /// Seconds since the start of the fit after each addition.
    pub step_elapsed: Vec<f64>,
    pub decomposition: Vec<TermSummary>,
    pub expression: String,
}

/// Everything a solve produces, kept in memory for callers that want to
/// inspect it.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub problem: IbvpProblem,
    pub set: TrainingSet,
    pub fit: FitOutcome,
    pub reference: Option<FourierReference>,
    pub report: RunReport,
}

fn term_rms(out: &FitOutcome, set: &TrainingSet) -> Result<Vec<f64>, CliError> {
    out.model
        .terms
        .iter()
        .map(|t| {
            let col = t.family.design_column(&t.params, set)?;
            let ss: f64 = col.iter().map(|v| (t.amplitude * v).powi(2)).sum();
            Ok((ss / set.len() as f64).sqrt())
        })
        .collect()
}

/// Solves one configuration. With `out`, artifacts are written there.
pub fn run(config: &RunConfig, out: Option<&Path>, quiet: bool) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let problem = config.problem()?;
    let set = config.training_set(&problem)?;
    let catalog = config.catalog()?;
    let hash = config_hash(config);

    let mut fitted = fit(&problem, &set, &catalog, &config.solver)?;
    fitted.model.config_hash = hash.clone();
    fitted.model.seed = config.solver.seed;
    let model = &fitted.model;
    let mut warnings = fitted.trace.warnings.clone();

    let reference = match build_reference(&problem, config.reference.modes) {
        Ok(r) => Some(r),
        Err(Error::Unsupported(m)) => {
            warnings.push(format!("no reference: {m}"));
            None
        }
        Err(e) => return Err(e.into()),
    };

    let rc = &config.reference;
    let grid = problem.domain.grid(rc.grid_nx, rc.grid_nt);
    let pred = model.predict(&grid, Which::Value)?;
    let ref_values = reference.as_ref().map(|r| r.eval_points(&grid));

    let (l2, max_b, max_d, ref_max) = match &ref_values {
        None => (None, None, None, None),
        Some(rv) => {
            let l2 = match l2re(&pred, rv) {
                Ok(v) => Some(v),
                Err(Error::UndefinedMetric(m)) => {
                    warnings.push(format!("L2RE undefined: {m}"));
                    None
                }
                Err(e) => return Err(e.into()),
            };
            let d = &problem.domain;
            let on_boundary = |p: &[f64; 2]| p[1] == d.t_min || p[0] == d.x_min || p[0] == d.x_max;
            let max_b = grid
                .iter()
                .zip(pred.iter().zip(rv))
                .filter(|(p, _)| on_boundary(p))
                .map(|(_, (a, b))| (a - b).abs())
                .fold(0.0, f64::max);
            let ref_max = rv.iter().map(|v| v.abs()).fold(0.0, f64::max);
            (l2, Some(max_b), Some(max_abs_error(&pred, rv)), Some(ref_max))
        }
    };

    let rms = term_rms(&fitted, &set)?;
    let decomposition = model
        .terms
        .iter()
        .zip(rms)
        .enumerate()
        .map(|(i, (t, ibc_rms))| TermSummary {
            index: i + 1,
            family: t.family.id.clone(),
            chain: t.family.chain_ids().into_iter().map(String::from).collect(),
            params: t.params.clone(),
            amplitude: t.amplitude,
            ibc_rms,
        })
        .collect();

    let report = RunReport {
        name: config.name(),
        pde: problem.pde.name().to_string(),
        profile: problem.profile.name().to_string(),
        ibc_mse: fitted.trace.final_mse(),
        l2re: l2,
        runtime_seconds: fitted.runtime,
        terms: model.len(),
        parameters: model.param_count(),
        nonlinear_parameters: model.nonlinear_param_count(),
        stop: fitted.trace.stop,
        max_boundary_error: max_b,
        max_domain_error: max_d,
        reference_max: ref_max,
        config_hash: hash,
        seed: config.solver.seed,
        warnings,
        step_elapsed: fitted.trace.records.iter().map(|r| r.elapsed).collect(),
        decomposition,
        expression: model.render_symbolic(),
    };

    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        output::write_model(&dir.join("model.json"), model)?;
        output::write_trace(&dir.join("trace.csv"), &fitted.trace)?;
        output::write_ibc_fit(&dir.join("ibc_fit.csv"), &problem, model, config.output.ibc_points)?;
        output::write_field(&dir.join("field.csv"), &grid, &pred, ref_values.as_deref())?;
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        fs::write(dir.join("report.json"), json + "\n")?;
        if config.output.plots {
            output::write_plot_script(&dir.join("plot.py"))?;
        }
    }

    if !quiet {
        eprintln!("{}", summary_line(&report));
        for w in &report.warnings {
            eprintln!("  warning: {w}");
        }
    }

    Ok(RunOutcome { config: config.clone(), problem, set, fit: fitted, reference, report })
}

pub fn summary_line(r: &RunReport) -> String {
    let l2 = r.l2re.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "n/a".into());
    format!(
        "{}: mse {:.3e}, l2re {l2}, {} terms, {} parameters, {:.2} s",
        r.name, r.ibc_mse, r.terms, r.parameters, r.runtime_seconds
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(extra: &str) -> RunConfig {
        RunConfig::from_toml(&format!(
            "pde = \"heat\"\n[initial]\nkind = \"sine\"\n[collocation]\npoints = 200\n[solver]\ncandidates = 50\nmax_terms = 3\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn report_counts_match_the_model() {
        let o = run(&quick(""), None, true).unwrap();
        let r = &o.report;
        assert_eq!(r.terms, o.fit.model.len());
        assert_eq!(r.parameters, r.terms + o.fit.model.terms.iter().map(|t| t.params.len()).sum::<usize>());
        assert_eq!(r.decomposition.len(), r.terms);
        assert!(r.l2re.is_some());
        assert_eq!(r.ibc_mse, o.fit.model.ibc_mse(&o.set).unwrap());
    }

    #[test]
    fn huge_tolerance_gives_an_empty_model() {
        let o = run(&quick("mse_tol = 1e300\n"), None, true).unwrap();
        assert_eq!(o.report.terms, 0);
        let y = &o.set.targets;
        let mean_sq = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        assert!((o.report.ibc_mse - mean_sq).abs() <= 1e-15 * mean_sq);
        assert_eq!(o.report.l2re, Some(1.0));
    }

    #[test]
    fn artifacts_are_written_and_repeatable() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut cfg = quick("");
        cfg.output.plots = true;
        run(&cfg, Some(a.path()), true).unwrap();
        run(&cfg, Some(b.path()), true).unwrap();
        for f in ["trace.csv", "ibc_fit.csv", "field.csv", "model.json"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
        }
        assert!(a.path().join("plot.py").exists());
        let trace = fs::read_to_string(a.path().join("trace.csv")).unwrap();
        assert!(trace.starts_with("step,family,score,mse,objective,refined"));
        let fit = fs::read_to_string(a.path().join("ibc_fit.csv")).unwrap();
        assert!(fit.lines().next().unwrap().ends_with("term_1,term_2,term_3"));
        assert_eq!(fit.lines().count(), 1 + 3 * 201);
        let field = fs::read_to_string(a.path().join("field.csv")).unwrap();
        assert_eq!(field.lines().count(), 1 + 100 * 100);
    }
}
