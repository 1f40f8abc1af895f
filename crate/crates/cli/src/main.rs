use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use corrnoise::experiments::{
    open_grid, run_and_write, vir_surface, write_surface_csv, ExperimentConfig, ModelSpec, SurfaceFormula,
};
use corrnoise::fisher::VirReport;
use corrnoise::infer::{optimize_map, sample_posterior, OptimizeConfig, Prior, SamplerConfig};
use corrnoise::likelihood::{Engine, NoiseSpec, ObservationModel};
use corrnoise::odes::{sensitivities, SensitivityMethod, Solver};
use corrnoise::workflow::{diagnose, DiagnoseConfig};
use corrnoise::{NoiseKind, NoiseModel, TimeSeries};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "corrnoise", version, about = "Inference for dynamical models under autocorrelated noise")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate observations of a model under a noise process.
    Simulate(SimulateArgs),
    /// Fit a model to data by optimization or MCMC.
    Fit(FitArgs),
    /// Residual diagnosis: IID fit, ACF, ARMA AIC grid, refit.
    Diagnose(DiagnoseArgs),
    /// Variance inflation ratios: closed forms, surfaces, or ODE models.
    Vir(VirArgs),
    /// Run a replicate study from a preset or a config file.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Constant,
    Logistic,
    Herg,
}

impl From<ModelArg> for ModelSpec {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Constant => ModelSpec::Constant,
            ModelArg::Logistic => ModelSpec::Logistic,
            ModelArg::Herg => ModelSpec::Herg { protocol: None, reversal_mv: None },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SimulateConfig {
    model: ModelSpec,
    params: Vec<f64>,
    noise: NoiseModel,
    t_start: f64,
    t_end: f64,
    length: usize,
    #[serde(default)]
    solver: Solver,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON simulation config; flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "logistic")]
    model: ModelArg,
    /// Dynamical parameters, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 50.0, 1.0])]
    params: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    phi: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    t_start: f64,
    #[arg(long, default_value_t = 20.0)]
    t_end: f64,
    #[arg(long, default_value_t = 500)]
    length: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    Optimize,
    Mcmc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NoiseArg {
    #[serde(default)]
    p: usize,
    #[serde(default)]
    q: usize,
    #[serde(default)]
    fixed_sigma: Option<f64>,
    #[serde(default)]
    fixed_rho: Option<Vec<f64>>,
    #[serde(default)]
    fixed_phi: Option<Vec<f64>>,
}

impl NoiseArg {
    fn spec(&self) -> NoiseSpec {
        let mut s = NoiseSpec::orders(self.p, self.q);
        s.fixed_sigma = self.fixed_sigma;
        s.fixed_rho = self.fixed_rho.clone();
        s.fixed_phi = self.fixed_phi.clone();
        s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FitConfig {
    model: ModelSpec,
    noise: NoiseArg,
    priors: Vec<Prior>,
    method: Method,
    #[serde(default)]
    engine: Engine,
    #[serde(default)]
    solver: Solver,
    #[serde(default)]
    sampler: SamplerConfig,
    #[serde(default)]
    optimize: OptimizeConfig,
}

#[derive(Args)]
struct FitArgs {
    /// JSON fit config (model, noise orders, priors, method, settings).
    #[arg(long)]
    config: PathBuf,
    /// Observations CSV with columns time,value.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DiagnoseFile {
    model: ModelSpec,
    /// Priors of the dynamical parameters only.
    priors: Vec<Prior>,
    #[serde(default)]
    solver: Solver,
    #[serde(default)]
    settings: DiagnoseConfig,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulaArg {
    Ar1,
    Ma1,
    Arma11,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VirConfig {
    model: ModelSpec,
    params: Vec<f64>,
    t_start: f64,
    t_end: f64,
    length: usize,
    rho: f64,
    /// Estimate the initial state jointly (logistic only).
    #[serde(default)]
    initial_state: bool,
}

#[derive(Args)]
struct VirArgs {
    /// ODE-model VIR config (sensitivity-based, AR(1) noise).
    #[arg(long, conflicts_with = "formula")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    formula: Option<FormulaArg>,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    /// Tabulate the formula over an open grid instead of one point.
    #[arg(long)]
    surface: bool,
    /// Grid points per axis for --surface.
    #[arg(long, default_value_t = 99)]
    grid: usize,
    /// Write here instead of printing.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Built-in study: logistic, ma1 or arma11.
    preset: Option<String>,
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Restore the full-size design of the preset.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Prints to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => read_json::<SimulateConfig>(p)?,
        None => SimulateConfig {
            model: a.model.into(),
            params: a.params.clone(),
            noise: NoiseModel::from_orders(a.sigma, a.rho.clone(), a.phi.clone())?,
            t_start: a.t_start,
            t_end: a.t_end,
            length: a.length,
            solver: Solver::Numerical,
        },
    };
    let dynamics = cfg.model.build()?;
    let noise = &cfg.noise;
    let obs = ObservationModel::new(dynamics, NoiseSpec::orders(noise.p(), noise.q())).with_solver(cfg.solver);
    let mut theta = cfg.params.clone();
    theta.push(noise.sigma());
    theta.extend(noise.rho());
    theta.extend(noise.phi());
    let grid = TimeSeries::grid(cfg.t_start, cfg.t_end, cfg.length)?;
    let data = obs.simulate(&grid, &theta, a.seed)?;
    fs::create_dir_all(&a.out)?;
    data.to_csv_file(a.out.join("data.csv"))?;
    let clean = grid.with_values(obs.predict(&grid, &theta)?)?;
    clean.to_csv_file(a.out.join("truth.csv"))?;
    write_json(&a.out.join("simulation.json"), &serde_json::json!({ "config": cfg, "seed": a.seed }))?;
    eprintln!("wrote {} observations to {}", data.len(), a.out.join("data.csv").display());
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    let cfg: FitConfig = read_json(&a.config)?;
    let data = TimeSeries::from_csv_file(&a.data)?;
    let model = ObservationModel::new(cfg.model.build()?, cfg.noise.spec()).with_engine(cfg.engine).with_solver(cfg.solver);
    let result = match cfg.method {
        Method::Optimize => optimize_map(&model, &data, &cfg.priors, a.seed, &cfg.optimize)?,
        Method::Mcmc => sample_posterior(&model, &data, &cfg.priors, &cfg.sampler, a.seed)?,
    };
    fs::create_dir_all(&a.out)?;
    result.to_json_file(a.out.join("fit.json"))?;
    if !result.chains.is_empty() {
        result.to_draws_csv_file(a.out.join("draws.csv"))?;
    }
    for (n, v) in result.param_names.iter().zip(&result.point) {
        match result.summary(n) {
            Some(s) => println!(
                "{n:>8} point {v:<12.6} median {:<12.6} 95% [{:.6}, {:.6}] rhat {}",
                s.median,
                s.q025,
                s.q975,
                s.rhat.map_or("-".into(), |r| format!("{r:.4}"))
            ),
            None => println!("{n:>8} {v:.6}"),
        }
    }
    Ok(())
}

fn run_diagnose(a: DiagnoseArgs) -> Result<()> {
    let cfg: DiagnoseFile = read_json(&a.config)?;
    let data = TimeSeries::from_csv_file(&a.data)?;
    let model = ObservationModel::new(cfg.model.build()?, NoiseSpec::iid()).with_solver(cfg.solver);
    let d = diagnose(&model, &data, &cfg.priors, &cfg.settings, a.seed)?;
    fs::create_dir_all(&a.out)?;
    d.residual_acf.to_csv_file(a.out.join("acf.csv"))?;
    write_json(&a.out.join("acf.json"), &d.residual_acf)?;
    d.aic.to_csv_file(a.out.join("aic.csv"))?;
    write_json(&a.out.join("aic.json"), &d.aic)?;
    write_json(&a.out.join("recommendation.json"), &d.recommendation)?;
    if let Some(acf) = &d.innovation_acf {
        acf.to_csv_file(a.out.join("innovation_acf.csv"))?;
    }
    write_json(&a.out.join("diagnosis.json"), &d)?;
    println!(
        "residual lag-1 ACF {:.3}; {:.0}% of first lags outside band; substantial autocorrelation: {}",
        d.residual_acf.rows[0].acf,
        100.0 * d.residual_acf.fraction_outside,
        d.residual_acf.substantial_autocorrelation
    );
    println!("best AIC ARMA{:?}; recommended ARMA({},{})", d.aic.best, d.recommendation.p, d.recommendation.q);
    println!("{}", d.recommendation.note);
    if let Some(white) = d.refit_is_white() {
        println!("refit innovations white: {white}");
    }
    Ok(())
}

fn vir(a: VirArgs) -> Result<()> {
    let (name, text) = if let Some(path) = &a.config {
        let cfg: VirConfig = read_json(path)?;
        let dynamics = cfg.model.build()?;
        let grid = TimeSeries::grid(cfg.t_start, cfg.t_end, cfg.length)?;
        let tr = sensitivities(dynamics.as_ref(), &cfg.params, &grid, SensitivityMethod::ForwardOde, &Default::default())?;
        let s = tr.sensitivities.context("no sensitivities")?;
        let x0 = if cfg.initial_state { cfg.model.initial_state_index() } else { None };
        if cfg.initial_state && x0.is_none() {
            bail!("model has no initial-state parameter");
        }
        ("vir.json", VirReport::multiparam(&s.matrix, &s.names, cfg.rho, x0)?.to_json()?)
    } else {
        let formula = match a.formula.context("need --formula or --config")? {
            FormulaArg::Ar1 => SurfaceFormula::Ar1,
            FormulaArg::Ma1 => SurfaceFormula::Ma1,
            FormulaArg::Arma11 => SurfaceFormula::Arma11,
        };
        if a.surface {
            let rhos = open_grid(-1.0, 1.0, a.grid);
            let phis = open_grid(-1.0, 1.0, a.grid);
            let mut buf = Vec::new();
            write_surface_csv(&vir_surface(formula, &rhos, &phis)?, &mut buf)?;
            ("vir_surface.csv", String::from_utf8(buf)?)
        } else {
            let noise = match formula {
                SurfaceFormula::Ar1 => NoiseModel::ar1(1.0, a.rho)?,
                SurfaceFormula::Ma1 => NoiseModel::ma1(1.0, a.phi)?,
                SurfaceFormula::Arma11 => NoiseModel::new(NoiseKind::Arma, 1.0, vec![a.rho], vec![a.phi])?,
            };
            ("vir.json", VirReport::constant(&noise, &["mu"])?.to_json()?)
        }
    };
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), text.trim_end().to_string() + "\n")?;
        }
        None => emit(text.trim_end())?,
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = match (&a.preset, &a.config) {
        (_, Some(path)) => ExperimentConfig::from_json_file(path)?,
        (Some(name), None) => ExperimentConfig::preset(name, a.paper_scale)?,
        (None, None) => bail!("give a preset name (logistic, ma1, arma11) or --config"),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = &a.out {
        cfg.out = Some(o.clone());
    }
    if cfg.out.is_none() {
        cfg.out = Some(PathBuf::from("out").join(&cfg.name));
    }
    let out = run_and_write(&cfg)?;
    let dir = cfg.out.as_ref().expect("set above");
    for c in &out.report.vir_curve {
        println!(
            "setting {:>2} rho [{}] phi [{}] {:>6}: posterior VIR {:.3} (sd {:.3}, n {}) theory {:.3}{}",
            c.setting,
            c.rho,
            c.phi,
            c.parameter,
            c.mean_vir,
            c.sd_vir,
            c.n,
            c.theory_asymptotic,
            c.theory_exact.map_or(String::new(), |e| format!(" / {e:.3} exact"))
        );
    }
    let att = &out.report.attrition;
    println!("{} of {} fits failed; outputs in {}", att.failed, att.fits, dir.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Diagnose(a) => run_diagnose(a),
        Command::Vir(a) => vir(a),
        Command::Experiment(a) => experiment(a),
    }
}
