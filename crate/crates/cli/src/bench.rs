//! Suite runner: one solve per listed configuration, collected into
//! `bench.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{RunConfig, SuiteConfig};
use crate::error::CliError;
use crate::output::num;
use crate::run::{run, RunReport};

#[derive(Debug, Clone)]
pub struct BenchFailure {
    pub name: String,
    pub config: PathBuf,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOutcome {
    pub reports: Vec<RunReport>,
    pub failures: Vec<BenchFailure>,
}

/// Runs every case of the suite. A failing case is recorded and the suite
/// moves on. Artifacts of case `name` go to `out/name/`, the tables to
/// `out/` itself.
pub fn bench(suite: &SuiteConfig, out: Option<&Path>, seed: Option<u64>, quiet: bool) -> Result<BenchOutcome, CliError> {
    let mut outcome = BenchOutcome::default();
    for case in &suite.cases {
        let attempt = RunConfig::load(&case.config).and_then(|mut cfg| {
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            let dir = out.map(|o| o.join(cfg.name()));
            run(&cfg, dir.as_deref(), quiet)
        });
        match attempt {
            Ok(o) => outcome.reports.push(o.report),
            Err(e) => {
                if !quiet {
                    eprintln!("{}: failed: {e}", case.config.display());
                }
                let name = case.config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                outcome.failures.push(BenchFailure { name, config: case.config.clone(), error: e.to_string() });
            }
        }
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_tables(dir, &outcome)?;
    }
    Ok(outcome)
}

/// `bench.csv` holds the reproducible columns; wall times are kept apart in
/// `bench_timing.csv`. `n_parameters` counts nonlinear parameters only,
/// the amplitudes are one per term.
pub fn write_tables(dir: &Path, outcome: &BenchOutcome) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(dir.join("bench.csv"))?;
    w.write_record(["name", "pde", "ibc_type", "mse", "l2re", "n_base_terms", "n_parameters"])?;
    for r in &outcome.reports {
        w.write_record([
            r.name.clone(),
            r.pde.clone(),
            r.profile.clone(),
            num(r.ibc_mse),
            r.l2re.map(num).unwrap_or_default(),
            r.terms.to_string(),
            r.nonlinear_parameters.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("bench_timing.csv"))?;
    w.write_record(["name", "runtime_seconds"])?;
    for r in &outcome.reports {
        w.write_record([r.name.clone(), format!("{:.3}", r.runtime_seconds)])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("failures.csv"))?;
    w.write_record(["name", "config", "error"])?;
    for f in &outcome.failures {
        w.write_record([f.name.clone(), f.config.display().to_string(), f.error.clone()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SuiteCase;

    #[test]
    fn tables_follow_the_reports() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("wave.toml");
        fs::write(
            &cfg,
            "pde = \"wave\"\n[initial]\nkind = \"sine\"\n[collocation]\npoints = 200\n[solver]\ncandidates = 30\nmax_terms = 2\n",
        )
        .unwrap();
        let suite = SuiteConfig {
            cases: vec![SuiteCase { config: cfg }, SuiteCase { config: dir.path().join("missing.toml") }],
        };
        let out = dir.path().join("out");
        let o = bench(&suite, Some(&out), Some(4), true).unwrap();
        assert_eq!((o.reports.len(), o.failures.len()), (1, 1));
        assert_eq!(o.failures[0].name, "missing");

        let r = &o.reports[0];
        assert!(out.join("wave_sine/model.json").exists());
        let table = fs::read_to_string(out.join("bench.csv")).unwrap();
        let row: Vec<&str> = table.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row[..3], ["wave_sine", "wave", "sine"]);
        assert_eq!(row[5], r.terms.to_string());
        assert_eq!(row[6], (r.parameters - r.terms).to_string());
        let timing = fs::read_to_string(out.join("bench_timing.csv")).unwrap();
        assert_eq!(timing.lines().count(), 2);
    }
}
