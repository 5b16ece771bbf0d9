mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use precise::bench::{run_bench, sensitivity_csv, sensitivity_study, to_csv, BenchConfig, HRule};
use precise::dp::{gdp_to_delta, mu_from_eps_delta, PrivacyBudget};
use precise::exec::ExecutionMode;
use precise::exp_quantile::{ppquantile, private_quantile, QuantileRequest};
use precise::histogram::{check_tail_assumption, p3_histogram, CollapseMode, HistogramSpec, SanitizedHistogram};
use precise::posterior::{DataBounds, Dataset, PosteriorModel, Priors, Task};
use precise::precise::{release_interval, release_quantile_detailed, PreciseVariant};
use precise::rng::SeedStream;
use precise::sensitivity::{g0_upper_bound, GnConfig, HistogramBudget, SensitivityMethod, UpperBoundConfig};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
}

impl From<precise::Error> for CliError {
    fn from(e: precise::Error) -> Self {
        if e.is_numeric_degeneracy() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "precise",
    version,
    about = "Private Bayesian interval and quantile release from sanitized posterior histograms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Release a private posterior interval.
    Ppie(PpieArgs),
    /// Release a single private quantile.
    Quantile(QuantileArgs),
    /// Run a coverage and width simulation grid.
    Bench(BenchArgs),
    /// Compare numeric, analytic and upper-bound sensitivity over n.
    Sensitivity(SensitivityArgs),
    /// Convert between mu-GDP and (epsilon, delta).
    Convert(ConvertArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// gaussian_mean, gaussian_variance, bernoulli, poisson or regression_slope.
    #[arg(long, value_parser = parse_task_name)]
    model: String,
    /// Data file with one value per line (or `z,y` pairs for regression).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    xbar: Option<f64>,
    #[arg(long)]
    s2: Option<f64>,
    #[arg(long = "sum-x")]
    sum_x: Option<f64>,
    #[arg(long = "beta1-hat")]
    beta1_hat: Option<f64>,
    #[arg(long)]
    sxx: Option<f64>,
    #[arg(long = "sigma2-hat")]
    sigma2_hat: Option<f64>,
    #[arg(long = "prior-a", default_value_t = 1.0)]
    prior_a: f64,
    #[arg(long = "prior-b", default_value_t = 1.0)]
    prior_b: f64,
    #[arg(long = "prior-shape", default_value_t = 0.1)]
    prior_shape: f64,
    #[arg(long = "prior-rate", default_value_t = 0.1)]
    prior_rate: f64,
    /// Lower data bound.
    #[arg(long, allow_hyphen_values = true)]
    lx: Option<f64>,
    /// Upper data bound.
    #[arg(long, allow_hyphen_values = true)]
    ux: Option<f64>,
    /// Lower parameter bound.
    #[arg(long, allow_hyphen_values = true)]
    l: Option<f64>,
    /// Upper parameter bound.
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
}

#[derive(Args)]
struct BudgetArgs {
    /// Pure epsilon-DP budget (Laplace noise).
    #[arg(long, conflicts_with = "mu")]
    eps: Option<f64>,
    /// mu-GDP budget (Gaussian noise).
    #[arg(long)]
    mu: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CollapseArg {
    Count,
    Proportion,
}

#[derive(Args)]
struct HistArgs {
    /// Bin width; defaults to the rule that gives m = 1000 at n = 1000.
    #[arg(long)]
    h: Option<f64>,
    /// Posterior sample count; overrides back-calculation and scales the noise.
    #[arg(long)]
    m: Option<u64>,
    /// Sensitivity G; defaults to the upper bound for the model.
    #[arg(long)]
    g: Option<f64>,
    #[arg(long, value_enum, default_value = "count")]
    collapse: CollapseArg,
    #[arg(long = "tau-l", default_value_t = 0.0)]
    tau_l: f64,
    #[arg(long = "tau-u", default_value_t = 0.0)]
    tau_u: f64,
    /// Multiple of sigma in the Gaussian upper bounds.
    #[arg(long = "k-sigma", default_value_t = 5.0)]
    k_sigma: f64,
    #[arg(long = "sigma-floor", default_value_t = 0.25)]
    sigma_floor: f64,
}

#[derive(Args)]
struct PpieArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    hist: HistArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// +m*, +m, -m* or -m (also plus-mstar, minus-m, ...).
    #[arg(long, default_value = "plus-mstar", value_parser = parse_variant)]
    variant: PreciseVariant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantileMethod {
    /// Histogram release.
    Precise,
    /// Exponential mechanism on posterior draws.
    Ppquantile,
    /// Exponential mechanism on the data.
    Private,
}

#[derive(Args)]
struct QuantileArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    hist: HistArgs,
    #[arg(long)]
    q: f64,
    #[arg(long, value_enum, default_value = "precise")]
    method: QuantileMethod,
    #[arg(long, default_value = "plus-mstar", value_parser = parse_variant)]
    variant: PreciseVariant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SensitivityArg {
    Numeric,
    Analytic,
    Upper,
}

impl From<SensitivityArg> for SensitivityMethod {
    fn from(s: SensitivityArg) -> Self {
        match s {
            SensitivityArg::Numeric => SensitivityMethod::Numeric,
            SensitivityArg::Analytic => SensitivityMethod::AnalyticG0,
            SensitivityArg::Upper => SensitivityMethod::UpperBoundG0bar,
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// JSON bench configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Task with its default parameters.
    #[arg(long, value_parser = parse_task_name)]
    task: Option<String>,
    #[arg(long = "n", value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', conflicts_with = "mu")]
    eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    variants: Option<Vec<PreciseVariant>>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Fixed bin width for every n.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, value_enum)]
    sensitivity: Option<SensitivityArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// n up to 50000 and 1000 repeats.
    #[arg(long = "full-grid")]
    full_grid: bool,
    /// Skip the non-private baseline cells.
    #[arg(long = "no-baseline")]
    no_baseline: bool,
    #[arg(long)]
    sequential: bool,
    /// Record per-trial wall time (makes mean_ms nondeterministic).
    #[arg(long)]
    timing: bool,
    /// Also write an SVG chart of coverage and width against the budget.
    #[arg(long)]
    plot: bool,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SensitivityArgs {
    /// JSON bench configuration; its task, n grid, bounds and seed are used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_task_name)]
    task: Option<String>,
    #[arg(long = "n", value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

fn parse_task_name(s: &str) -> Result<String, String> {
    let name = s.replace('-', "_");
    Task::default_for(&name).map(|_| name).ok_or_else(|| format!("unknown model '{s}'"))
}

fn parse_variant(s: &str) -> Result<PreciseVariant, String> {
    PreciseVariant::parse(s).ok_or_else(|| format!("unknown variant '{s}' (use +m*, +m, -m* or -m)"))
}

fn need<T>(v: Option<T>, flag: &str, model: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("--{flag} is required for model {model} without --data")))
}

fn read_dataset(path: &Path, paired: bool) -> CliResult<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("--data {}: {e}", path.display())))?;
    let mut single = Vec::new();
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || usage(format!("--data {}: line {} is not a number: '{line}'", path.display(), i + 1));
        if paired {
            let (z, y) = line.split_once(',').ok_or_else(bad)?;
            pairs.push((z.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?));
        } else {
            single.push(line.parse::<f64>().map_err(|_| bad())?);
        }
    }
    Ok(if paired { Dataset::Paired(pairs) } else { Dataset::Univariate(single) })
}

impl ModelArgs {
    fn task(&self) -> Task {
        Task::default_for(&self.model).expect("validated by the parser")
    }

    fn bounds(&self) -> CliResult<DataBounds> {
        let d = self.task().default_bounds();
        let b = DataBounds {
            lx: self.lx.unwrap_or(d.lx),
            ux: self.ux.unwrap_or(d.ux),
            l: self.l.unwrap_or(d.l),
            u: self.u.unwrap_or(d.u),
        };
        b.validate().map_err(|e| usage(format!("--lx/--ux/--l/--u: {e}")))?;
        Ok(b)
    }

    fn priors(&self) -> Priors {
        Priors {
            beta_a: self.prior_a,
            beta_b: self.prior_b,
            gamma_shape: self.prior_shape,
            gamma_rate: self.prior_rate,
        }
    }

    /// Clamped raw data, when given.
    fn data(&self, bounds: &DataBounds) -> CliResult<Option<Dataset>> {
        let Some(path) = &self.data else { return Ok(None) };
        let clamp = |v: f64| bounds.clamp_data(v);
        Ok(Some(match read_dataset(path, self.model == "regression_slope")? {
            Dataset::Univariate(x) => Dataset::Univariate(x.into_iter().map(clamp).collect()),
            Dataset::Paired(p) => Dataset::Paired(p.into_iter().map(|(z, y)| (clamp(z), clamp(y))).collect()),
        }))
    }

    fn posterior(&self, bounds: &DataBounds) -> CliResult<PosteriorModel> {
        if let Some(data) = self.data(bounds)? {
            return Ok(self.task().fit(&data, &self.priors())?);
        }
        let name = self.model.as_str();
        let n = need(self.n, "n", name)?;
        let model = match name {
            "gaussian_mean" => {
                PosteriorModel::GaussianMean { n, xbar: need(self.xbar, "xbar", name)?, s2: need(self.s2, "s2", name)? }
            }
            "gaussian_variance" => PosteriorModel::GaussianVariance { n, s2: need(self.s2, "s2", name)? },
            "bernoulli" => PosteriorModel::BernoulliProportion {
                n,
                k: need(self.k, "k", name)?,
                prior_a: self.prior_a,
                prior_b: self.prior_b,
            },
            "poisson" => PosteriorModel::PoissonMean {
                n,
                sum_x: need(self.sum_x, "sum-x", name)?,
                prior_shape: self.prior_shape,
                prior_rate: self.prior_rate,
            },
            _ => PosteriorModel::RegressionSlope {
                n,
                beta1_hat: need(self.beta1_hat, "beta1-hat", name)?,
                sxx: need(self.sxx, "sxx", name)?,
                sigma2_hat: need(self.sigma2_hat, "sigma2-hat", name)?,
            },
        };
        model.validate()?;
        Ok(model)
    }
}

impl BudgetArgs {
    fn budget(&self) -> CliResult<PrivacyBudget> {
        match (self.eps, self.mu) {
            (Some(e), None) => PrivacyBudget::pure(e).map_err(|e| usage(format!("--eps: {e}"))),
            (None, Some(m)) => PrivacyBudget::gdp(m).map_err(|e| usage(format!("--mu: {e}"))),
            _ => Err(usage("one of --eps or --mu is required")),
        }
    }
}

/// Everything needed to build one sanitized histogram.
struct HistogramSetup {
    model: PosteriorModel,
    spec: HistogramSpec,
    budget: HistogramBudget,
}

fn histogram_setup(model_args: &ModelArgs, budget: PrivacyBudget, hist: &HistArgs) -> CliResult<HistogramSetup> {
    let bounds = model_args.bounds()?;
    let model = model_args.posterior(&bounds)?;
    let g = match hist.g {
        Some(g) => g,
        None => {
            let cfg = UpperBoundConfig { k: hist.k_sigma, sigma_floor: hist.sigma_floor };
            g0_upper_bound(&model_args.task(), &bounds, &cfg)
                .map_err(|e| usage(format!("no default sensitivity for {} ({e}); pass --g", model_args.model)))?
        }
    };
    let h = match hist.h {
        Some(h) => h,
        None => HRule::default().h(model.n() as usize, g)?,
    };
    let hb = match hist.m {
        Some(m) => HistogramBudget::with_m(g, h, m),
        None => HistogramBudget::back_calculated(g, h),
    }
    .map_err(|e| match e {
        e @ precise::Error::BinWidthTooCoarse { .. } => usage(format!("--h: {e}")),
        other => other.into(),
    })?;
    let spec = HistogramSpec {
        l: bounds.l,
        u: bounds.u,
        h,
        collapse_mode: match hist.collapse {
            CollapseArg::Count => CollapseMode::CountThreshold,
            CollapseArg::Proportion => CollapseMode::ProportionThreshold,
        },
        tau_l: hist.tau_l,
        tau_u: hist.tau_u,
        variant: precise::histogram::HistogramVariant::Plus,
        budget,
    };
    Ok(HistogramSetup { model, spec, budget: hb })
}

impl HistogramSetup {
    fn sanitized(&self, stream: SeedStream) -> CliResult<SanitizedHistogram> {
        self.spec.validate().map_err(|e| usage(format!("histogram settings: {e}")))?;
        let hist = p3_histogram(
            &self.model,
            &self.spec,
            &self.budget,
            &mut stream.child(0).rng(),
            &mut stream.child(1).rng(),
        )?;
        let check = check_tail_assumption(&self.model, &self.spec.layout()?, hist.b_l, hist.b_u, self.budget.g)?;
        if let Some(w) = check.warning() {
            eprintln!("warning: {w}");
        }
        Ok(hist)
    }
}

fn emit(json: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, format!("{json}\n")).map_err(|e| usage(format!("--out {}: {e}", p.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn open_unit(flag: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--{flag} must lie in (0, 1), got {v}")))
    }
}

fn cmd_ppie(a: PpieArgs) -> CliResult<()> {
    open_unit("alpha", a.alpha)?;
    let budget = a.budget.budget()?;
    let mut setup = histogram_setup(&a.model, budget, &a.hist)?;
    setup.spec.variant = a.variant.histogram_variant();
    let stream = SeedStream::new(a.seed);
    let hist = setup.sanitized(stream)?;
    let iv = release_interval(&hist, a.alpha, a.variant, &mut stream.child(2).rng())
        .map_err(|e| usage(format!("--alpha: {e}")))?;
    emit(&to_json(&iv), a.out.as_deref())?;
    eprintln!(
        "{:.0}% interval ({}, {}) with {}, spent {} = {} (m = {}, h = {}, G = {})",
        iv.level * 100.0,
        iv.lower,
        iv.upper,
        iv.variant.label(),
        iv.notion,
        iv.epsilon_or_mu,
        setup.budget.m,
        setup.budget.h,
        setup.budget.g
    );
    if iv.diagnostics.crossed {
        eprintln!("warning: endpoint draws crossed and were swapped");
    }
    Ok(())
}

#[derive(Serialize)]
struct QuantileOutput {
    method: &'static str,
    q: f64,
    value: f64,
    notion: &'static str,
    epsilon_or_mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    variant: Option<PreciseVariant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_warning: Option<bool>,
}

fn cmd_quantile(a: QuantileArgs) -> CliResult<()> {
    open_unit("q", a.q)?;
    let budget = a.budget.budget()?;
    let stream = SeedStream::new(a.seed);
    let out = match a.method {
        QuantileMethod::Precise => {
            let mut setup = histogram_setup(&a.model, budget, &a.hist)?;
            setup.spec.variant = a.variant.histogram_variant();
            let hist = setup.sanitized(stream)?;
            let r = release_quantile_detailed(&hist, a.q, a.variant.normalizer(), &mut stream.child(2).rng())
                .map_err(|e| usage(format!("--q: {e}")))?;
            if r.tail_warning {
                eprintln!("warning: q = {} lies in a collapsed tail; the release may be far from the quantile", a.q);
            }
            QuantileOutput {
                method: "precise",
                q: a.q,
                value: r.value,
                notion: budget.notion(),
                epsilon_or_mu: budget.primary(),
                variant: Some(a.variant),
                tail_warning: Some(r.tail_warning),
            }
        }
        QuantileMethod::Ppquantile | QuantileMethod::Private => {
            let PrivacyBudget::PureEps { epsilon } = budget else {
                return Err(usage("--mu: the exponential mechanism needs --eps"));
            };
            let bounds = a.model.bounds()?;
            let (method, value) = if matches!(a.method, QuantileMethod::Ppquantile) {
                let model = a.model.posterior(&bounds)?;
                let req =
                    QuantileRequest { q: a.q, epsilon, l: bounds.l, u: bounds.u, m: a.hist.m.unwrap_or(1000) as usize };
                req.validate().map_err(|e| usage(format!("--q: {e}")))?;
                ("ppquantile", ppquantile(&model, &req, &mut stream.rng())?)
            } else {
                let data = match a.model.data(&bounds)? {
                    Some(Dataset::Univariate(x)) => x,
                    Some(Dataset::Paired(_)) => return Err(usage("--model: private quantiles need univariate data")),
                    None => return Err(usage("--data is required for --method private")),
                };
                let req = QuantileRequest { q: a.q, epsilon, l: bounds.lx, u: bounds.ux, m: data.len() };
                req.validate().map_err(|e| usage(format!("--q: {e}")))?;
                ("private", private_quantile(&data, &req, &mut stream.rng())?)
            };
            QuantileOutput {
                method,
                q: a.q,
                value,
                notion: "eps",
                epsilon_or_mu: epsilon,
                variant: None,
                tail_warning: None,
            }
        }
    };
    emit(&to_json(&out), a.out.as_deref())?;
    eprintln!("{} quantile at q = {}: {}, spent {} = {}", out.method, out.q, out.value, out.notion, out.epsilon_or_mu);
    Ok(())
}

fn load_config(path: Option<&Path>) -> CliResult<Option<BenchConfig>> {
    let Some(p) = path else { return Ok(None) };
    let text = fs::read_to_string(p).map_err(|e| usage(format!("--config {}: {e}", p.display())))?;
    serde_json::from_str(&text).map(Some).map_err(|e| usage(format!("--config {}: {e}", p.display())))
}

fn bench_config(a: &BenchArgs) -> CliResult<BenchConfig> {
    let mut cfg = load_config(a.config.as_deref())?.unwrap_or_default();
    if let Some(t) = &a.task {
        cfg.task = Task::default_for(t).expect("validated by the parser");
        if a.config.is_none() {
            cfg.bounds = None;
        }
    }
    if a.full_grid {
        cfg = cfg.full_grid();
    }
    if let Some(n) = &a.n_grid {
        cfg.n_grid = n.clone();
    }
    if let Some(e) = &a.eps {
        cfg.budgets = e.iter().map(|&epsilon| PrivacyBudget::PureEps { epsilon }).collect();
    }
    if let Some(m) = &a.mu {
        cfg.budgets = m.iter().map(|&mu| PrivacyBudget::Gdp { mu }).collect();
    }
    if let Some(v) = &a.variants {
        cfg.variants = v.clone();
    }
    if let Some(r) = a.repeats {
        cfg.repeats = r;
    }
    if let Some(al) = a.alpha {
        cfg.alpha = al;
    }
    if let Some(h) = a.h {
        cfg.h_rule = HRule::Fixed { h };
    }
    if let Some(s) = a.sensitivity {
        cfg.sensitivity = s.into();
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if a.no_baseline {
        cfg.baseline = false;
    }
    if a.sequential {
        cfg.mode = ExecutionMode::Sequential;
    }
    if a.timing {
        cfg.timing = true;
    }
    cfg.validate().map_err(|e| usage(format!("bench configuration: {e}")))?;
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| usage(format!("--out-dir: cannot write {}: {e}", path.display())))
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    let cfg = bench_config(&a)?;
    if !a.out_dir.is_dir() {
        fs::create_dir_all(&a.out_dir).map_err(|e| usage(format!("--out-dir {}: {e}", a.out_dir.display())))?;
    }
    let rows = run_bench(&cfg)?;
    let stem = format!("bench_{}", cfg.task.name());
    let csv_path = a.out_dir.join(format!("{stem}.csv"));
    write_file(&csv_path, &to_csv(&rows))?;
    write_file(&a.out_dir.join(format!("{stem}.config.json")), &(to_json(&cfg.resolved()) + "\n"))?;
    if a.plot {
        write_file(&a.out_dir.join(format!("{stem}.svg")), &svg::render(cfg.task.name(), &rows))?;
    }
    let failed: usize = rows.iter().map(|r| r.failed_count).sum();
    eprintln!("wrote {} rows to {}", rows.len(), csv_path.display());
    if failed > 0 {
        eprintln!("warning: {failed} trials failed and were scored as not covering");
    }
    Ok(())
}

fn cmd_sensitivity(a: SensitivityArgs) -> CliResult<()> {
    let mut cfg = load_config(a.config.as_deref())?.unwrap_or_default();
    if let Some(t) = &a.task {
        cfg.task = Task::default_for(t).expect("validated by the parser");
        if a.config.is_none() {
            cfg.bounds = None;
        }
    }
    if let Some(n) = &a.n_grid {
        cfg.n_grid = n.clone();
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    let gn = GnConfig { pairs: a.pairs.unwrap_or(cfg.gn.pairs), grid: a.grid.unwrap_or(cfg.gn.grid), ..cfg.gn };
    if gn.pairs == 0 {
        return Err(usage("--pairs must be at least 1"));
    }
    if gn.grid < 10 {
        return Err(usage("--grid must be at least 10"));
    }
    let rows = sensitivity_study(&cfg.task, &cfg.n_grid, &cfg.bounds(), &gn, &cfg.upper, cfg.master_seed)?;
    let csv = sensitivity_csv(&rows);
    match &a.out {
        Some(p) => fs::write(p, csv).map_err(|e| usage(format!("--out {}: {e}", p.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Conversion {
    mu: f64,
    epsilon: f64,
    delta: f64,
}

fn cmd_convert(a: ConvertArgs) -> CliResult<()> {
    let c = match (a.mu, a.eps, a.delta) {
        (Some(mu), Some(eps), None) => {
            let delta = gdp_to_delta(mu, eps).map_err(|e| usage(format!("--mu: {e}")))?;
            Conversion { mu, epsilon: eps, delta }
        }
        (None, Some(eps), Some(delta)) => {
            if eps.is_nan() || eps <= 0.0 {
                return Err(usage(format!("--eps must be positive, got {eps}")));
            }
            if !(delta > 0.0 && delta < 1.0) {
                return Err(usage(format!("--delta must lie in (0, 1), got {delta}")));
            }
            Conversion { mu: mu_from_eps_delta(eps, delta)?, epsilon: eps, delta }
        }
        _ => return Err(usage("give --mu with --eps, or --eps with --delta")),
    };
    println!("{}", serde_json::to_string(&c).expect("plain data serializes"));
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("PRECISE_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("PRECISE_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| usage(format!("PRECISE_THREADS: {e}")))
}

/// Clap renders multi-line errors; keep the line naming the argument and
/// fold a trailing argument list onto it.
fn one_line(err: &clap::Error) -> String {
    let text = err.to_string();
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let mut out = lines.next().unwrap_or("error: invalid arguments").to_string();
    if out.ends_with(':') {
        for l in lines.take_while(|l| !l.starts_with("Usage:")) {
            out.push(' ');
            out.push_str(l);
        }
    }
    out
}

fn run() -> CliResult<()> {
    configure_threads()?;
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) if e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            return Err(usage(format!("missing subcommand\n{e}").lines().next().unwrap_or_default().to_string()));
        }
        Err(e) => return Err(usage(one_line(&e).trim_start_matches("error: ").to_string())),
    };
    match cli.command {
        Command::Ppie(a) => cmd_ppie(a),
        Command::Quantile(a) => cmd_quantile(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Sensitivity(a) => cmd_sensitivity(a),
        Command::Convert(a) => cmd_convert(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
