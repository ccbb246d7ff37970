use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lieibvp::bases::Which;
use lieibvp::geometry::{IcProfile, PdeKind};
use lieibvp::reference::build_reference;
use lieibvp::solver::Model;
use lieibvp_cli::bench::bench;
use lieibvp_cli::config::{RunConfig, SuiteConfig};
use lieibvp_cli::output::write_values;
use lieibvp_cli::run::run;
use lieibvp_cli::verify::{verify_all, VerifyConfig};
use lieibvp_cli::CliError;

/// Solve linear heat and wave IBVPs with superpositions of symmetry-generated
/// exact solutions.
#[derive(Parser, Debug)]
#[command(name = "lieibvp", version)]
struct Cli {
    /// Override the collocation and candidate seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 or unset uses all cores.
    #[arg(long, global = true, env = "LIEIBVP_THREADS")]
    threads: Option<usize>,
    /// Suppress progress output.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit one configuration and write its artifacts.
    Solve { config: PathBuf },
    /// Run every configuration of a suite and write `bench.csv`.
    Bench { suite: PathBuf },
    /// Check that transforms and catalog families solve their PDE.
    Verify {
        /// Check this configuration's catalog instead of the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Random parameter draws per family.
        #[arg(long, default_value_t = 100)]
        draws: usize,
    },
    /// Evaluate a saved model on an `NXxNT` grid (`x, t, value`).
    ExportFields { model: PathBuf, grid: String },
    /// Evaluate the Fourier reference of a configuration on its grid.
    ExportReference { config: PathBuf },
    /// Print a configuration with every default spelled out.
    Template {
        #[arg(value_enum)]
        pde: Pde,
        #[arg(long, value_enum, default_value_t = Profile::Sine)]
        initial: Profile,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Pde {
    Heat,
    Wave,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Profile {
    Polynomial,
    Gaussian,
    GaussianMix,
    Sine,
    SineMix,
    Step,
}

impl Profile {
    fn build(self) -> IcProfile {
        match self {
            Profile::Polynomial => IcProfile::polynomial(),
            Profile::Gaussian => IcProfile::gaussian(),
            Profile::GaussianMix => IcProfile::gaussian_mix(),
            Profile::Sine => IcProfile::sine(),
            Profile::SineMix => IcProfile::sine_mix(),
            Profile::Step => IcProfile::step(),
        }
    }
}

fn parse_grid(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("grid spec {spec:?} is not of the form NXxNT with both at least 2"));
    let (a, b) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    let (nx, nt) = (a.trim().parse::<usize>().map_err(|_| bad())?, b.trim().parse::<usize>().map_err(|_| bad())?);
    if nx < 2 || nt < 2 {
        return Err(bad());
    }
    Ok((nx, nt))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let out = cli.out.clone();
    match cli.command {
        Command::Solve { config } => {
            let cfg = load_config(&config, cli.seed)?;
            let dir = out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(cfg.name()));
            let o = run(&cfg, Some(&dir), cli.quiet)?;
            if !cli.quiet {
                eprintln!("artifacts in {}", dir.display());
            }
            println!("{}", serde_json::to_string_pretty(&o.report).expect("report serializes"));
            Ok(())
        }
        Command::Bench { suite } => {
            let s = SuiteConfig::load(&suite)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("out").join("bench"));
            let o = bench(&s, Some(&dir), cli.seed, cli.quiet)?;
            println!("{} cases, {} failures; tables in {}", o.reports.len(), o.failures.len(), dir.display());
            Ok(())
        }
        Command::Verify { config, draws } => {
            let mut vcfg = VerifyConfig { draws, ..VerifyConfig::default() };
            if let Some(s) = cli.seed {
                vcfg.seed = s;
            }
            let checks = match config {
                Some(path) => {
                    let cfg = RunConfig::load(&path)?;
                    let catalog = cfg.catalog_unchecked()?;
                    verify_all(Some((&catalog, cfg.domain())), &vcfg)
                }
                None => verify_all(None, &vcfg),
            };
            for c in &checks {
                println!("{}", c.line());
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", checks.len());
            match failed {
                0 => Ok(()),
                n => Err(CliError::Verification(format!("{n} of {} checks failed", checks.len()))),
            }
        }
        Command::ExportFields { model, grid } => {
            let (nx, nt) = parse_grid(&grid)?;
            let text = std::fs::read_to_string(&model).map_err(|e| CliError::Config(format!("{}: {e}", model.display())))?;
            let m = Model::from_json(&text)?;
            let pts = m.domain.grid(nx, nt);
            let values = m.predict(&pts, Which::Value)?;
            let path = out.unwrap_or_else(|| PathBuf::from("field.csv"));
            write_values(&path, &pts, &values)?;
            if !cli.quiet {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::ExportReference { config } => {
            let cfg = load_config(&config, cli.seed)?;
            cfg.reference.validate()?;
            let problem = cfg.problem()?;
            let r = build_reference(&problem, cfg.reference.modes)?;
            let pts = problem.domain.grid(cfg.reference.grid_nx, cfg.reference.grid_nt);
            let path = out.unwrap_or_else(|| PathBuf::from("reference.csv"));
            write_values(&path, &pts, &r.eval_points(&pts))?;
            if !cli.quiet {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Template { pde, initial } => {
            let pde = match pde {
                Pde::Heat => PdeKind::Heat,
                Pde::Wave => PdeKind::Wave,
            };
            let cfg = RunConfig::template(pde, initial.build());
            cfg.validate()?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // usage errors count as configuration errors (exit 1), not clap's 2
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
