//! Repeated-trial simulation harness: coverage and width of released
//! intervals across sample sizes, budgets and variants.
//!
//! Trial `t` at sample-size index `i` draws its data from stream
//! `(i, t, 0)`, its posterior samples from `(i, t, 1)`, its noise from
//! `(i, t, 2)` and its release from `(i, t, 3)`. None of these depend on the
//! budget or variant, so every cell of a row sees the same datasets and the
//! same underlying randomness.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dp::PrivacyBudget;
use crate::error::{invalid, probability_open, Result};
use crate::exec::{map_indices, ExecutionMode};
use crate::histogram::{p3_histogram, CollapseMode, HistogramSpec};
use crate::posterior::{DataBounds, PosteriorModel, Priors, Task};
use crate::precise::{release_interval, IntervalEstimate, PreciseVariant};
use crate::rng::SeedStream;
use crate::sensitivity::{
    g0_analytic, g0_upper_bound, gn_numeric, resolve_sensitivity, GnConfig, HistogramBudget, SensitivityMethod,
    SensitivitySpec, UpperBoundConfig,
};

/// How the bin width is chosen for sample size `n` and sensitivity `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum HRule {
    Fixed {
        h: f64,
    },
    /// `h = c / sqrt(n)`.
    RootN {
        c: f64,
    },
    /// `h = c / sqrt(n)` with `c` set so that the back-calculated `m` is
    /// `m_ref` at `n = n_ref`; `m` then grows like `sqrt(n)`.
    TargetM {
        m_ref: f64,
        n_ref: f64,
    },
}

impl Default for HRule {
    fn default() -> Self {
        HRule::TargetM { m_ref: 1000.0, n_ref: 1000.0 }
    }
}

impl HRule {
    pub fn h(&self, n: usize, g: f64) -> Result<f64> {
        let h = match *self {
            HRule::Fixed { h } => h,
            HRule::RootN { c } => c / (n as f64).sqrt(),
            HRule::TargetM { m_ref, n_ref } => n_ref.sqrt() / (2.0 * g * m_ref * (n as f64).sqrt()),
        };
        if h.is_finite() && h > 0.0 {
            Ok(h)
        } else {
            Err(invalid(format!("bin width rule {self:?} gave h = {h}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub task: Task,
    pub n_grid: Vec<usize>,
    pub budgets: Vec<PrivacyBudget>,
    pub variants: Vec<PreciseVariant>,
    pub repeats: usize,
    pub alpha: f64,
    pub h_rule: HRule,
    /// Defaults to the task's bounds.
    pub bounds: Option<DataBounds>,
    pub collapse_mode: CollapseMode,
    pub tau_l: f64,
    pub tau_u: f64,
    pub sensitivity: SensitivityMethod,
    pub upper: UpperBoundConfig,
    pub gn: GnConfig,
    pub priors: Priors,
    /// Fixes `m` instead of back-calculating it; the noise then scales with
    /// `2 m h G`.
    pub m_override: Option<u64>,
    /// Adds a non-private posterior-interval cell per sample size.
    pub baseline: bool,
    pub master_seed: u64,
    pub mode: ExecutionMode,
    /// Records wall time per trial. Off by default so that the CSV output is
    /// a pure function of the configuration.
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            task: Task::GaussianMean { mu: 0.0, sigma: 1.0 },
            n_grid: vec![100, 500, 1000, 5000, 10_000],
            budgets: [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0]
                .iter()
                .map(|&e| PrivacyBudget::PureEps { epsilon: e })
                .collect(),
            variants: PreciseVariant::ALL.to_vec(),
            repeats: 500,
            alpha: 0.05,
            h_rule: HRule::default(),
            bounds: None,
            collapse_mode: CollapseMode::CountThreshold,
            tau_l: 0.0,
            tau_u: 0.0,
            sensitivity: SensitivityMethod::UpperBoundG0bar,
            upper: UpperBoundConfig::default(),
            gn: GnConfig::default(),
            priors: Priors::default(),
            m_override: None,
            baseline: true,
            master_seed: 20_240_601,
            mode: ExecutionMode::Parallel,
            timing: false,
        }
    }
}

impl BenchConfig {
    pub fn for_task(task: Task) -> Self {
        BenchConfig { task, ..Default::default() }
    }

    /// The large grid: `n` up to 50000 and 1000 repeats per cell.
    pub fn full_grid(mut self) -> Self {
        self.n_grid = vec![100, 500, 1000, 5000, 10_000, 50_000];
        self.repeats = 1000;
        self
    }

    pub fn bounds(&self) -> DataBounds {
        self.bounds.unwrap_or_else(|| self.task.default_bounds())
    }

    /// Fills in the bounds so the resolved configuration is self-describing.
    pub fn resolved(&self) -> Self {
        BenchConfig { bounds: Some(self.bounds()), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        self.bounds().validate()?;
        if self.repeats == 0 {
            return Err(invalid("repeats must be at least 1"));
        }
        if self.n_grid.is_empty() {
            return Err(invalid("n grid is empty"));
        }
        if self.budgets.is_empty() && !self.baseline {
            return Err(invalid("nothing to run: no budgets and no baseline"));
        }
        if !self.budgets.is_empty() && self.variants.is_empty() {
            return Err(invalid("variant list is empty"));
        }
        for b in &self.budgets {
            b.validate()?;
            if matches!(b, PrivacyBudget::ApproxDp { .. }) {
                return Err(invalid("histogram noise needs a pure epsilon or mu budget"));
            }
        }
        probability_open("alpha", self.alpha)?;
        Ok(())
    }

    /// Histogram settings shared by every cell at sample size `n`.
    pub fn histogram_plan(&self, n_index: usize) -> Result<HistogramPlan> {
        let n = *self.n_grid.get(n_index).ok_or_else(|| invalid("n index out of range"))?;
        let bounds = self.bounds();
        let sens = resolve_sensitivity(
            self.sensitivity,
            &self.task,
            n,
            &bounds,
            &self.upper,
            &self.gn,
            SeedStream::new(self.master_seed).path(&[n_index as u64, u64::MAX]),
        )?;
        let h = self.h_rule.h(n, sens.value)?;
        let budget = match self.m_override {
            Some(m) => HistogramBudget::with_m(sens.value, h, m)?,
            None => HistogramBudget::back_calculated(sens.value, h)?,
        };
        Ok(HistogramPlan { n, bounds, sensitivity: sens, budget })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramPlan {
    pub n: usize,
    pub bounds: DataBounds,
    pub sensitivity: SensitivitySpec,
    pub budget: HistogramBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellKind {
    Private {
        budget: PrivacyBudget,
        variant: PreciseVariant,
    },
    /// Exact central posterior interval, no privacy mechanism.
    NonPrivate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n_index: usize,
    pub kind: CellKind,
}

impl BenchConfig {
    /// Cells in output order: per sample size, the baseline first and then
    /// budgets by variants.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for n_index in 0..self.n_grid.len() {
            if self.baseline {
                out.push(Cell { n_index, kind: CellKind::NonPrivate });
            }
            for &budget in &self.budgets {
                for &variant in &self.variants {
                    out.push(Cell { n_index, kind: CellKind::Private { budget, variant } });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub n: usize,
    pub kind: CellKind,
    pub trial: usize,
    pub covered: bool,
    pub width: f64,
    pub crossed: bool,
    pub wall_ms: Option<f64>,
    pub error: Option<String>,
}

fn trial_stream(cfg: &BenchConfig, n_index: usize, trial: usize, stage: u64) -> SeedStream {
    SeedStream::new(cfg.master_seed).path(&[n_index as u64, trial as u64, stage])
}

fn simulate(cfg: &BenchConfig, plan: &HistogramPlan, n_index: usize, trial: usize) -> Result<(PosteriorModel, f64)> {
    let mut rng = trial_stream(cfg, n_index, trial, 0).rng();
    let sim = cfg.task.simulate_dataset(plan.n, &plan.bounds, &cfg.priors, &mut rng)?;
    Ok((sim.model, sim.truth))
}

fn private_trial(
    cfg: &BenchConfig,
    plan: &HistogramPlan,
    n_index: usize,
    trial: usize,
    budget: PrivacyBudget,
    variant: PreciseVariant,
) -> Result<(IntervalEstimate, f64)> {
    let (model, truth) = simulate(cfg, plan, n_index, trial)?;
    let spec = HistogramSpec {
        l: plan.bounds.l,
        u: plan.bounds.u,
        h: plan.budget.h,
        collapse_mode: cfg.collapse_mode,
        tau_l: cfg.tau_l,
        tau_u: cfg.tau_u,
        variant: variant.histogram_variant(),
        budget,
    };
    let hist = p3_histogram(
        &model,
        &spec,
        &plan.budget,
        &mut trial_stream(cfg, n_index, trial, 1).rng(),
        &mut trial_stream(cfg, n_index, trial, 2).rng(),
    )?;
    let iv = release_interval(&hist, cfg.alpha, variant, &mut trial_stream(cfg, n_index, trial, 3).rng())?;
    Ok((iv, truth))
}

fn baseline_trial(cfg: &BenchConfig, plan: &HistogramPlan, n_index: usize, trial: usize) -> Result<(f64, f64, f64)> {
    let (model, truth) = simulate(cfg, plan, n_index, trial)?;
    let (lo, hi) = model.central_interval(cfg.alpha)?;
    Ok((lo, hi, truth))
}

/// Runs every repeat of one cell. Failing trials are recorded with their
/// error and count as not covered.
pub fn run_cell(cfg: &BenchConfig, plan: &HistogramPlan, cell: &Cell) -> Vec<TrialReport> {
    map_indices(cfg.repeats, cfg.mode, |trial| {
        let start = cfg.timing.then(Instant::now);
        let outcome = match cell.kind {
            CellKind::NonPrivate => baseline_trial(cfg, plan, cell.n_index, trial)
                .map(|(lo, hi, truth)| (lo <= truth && truth <= hi, hi - lo, false)),
            CellKind::Private { budget, variant } => private_trial(cfg, plan, cell.n_index, trial, budget, variant)
                .map(|(iv, truth)| (iv.contains(truth), iv.width(), iv.diagnostics.crossed)),
        };
        let wall_ms = start.map(|s| s.elapsed().as_secs_f64() * 1e3);
        match outcome {
            Ok((covered, width, crossed)) => {
                TrialReport { n: plan.n, kind: cell.kind, trial, covered, width, crossed, wall_ms, error: None }
            }
            Err(e) => TrialReport {
                n: plan.n,
                kind: cell.kind,
                trial,
                covered: false,
                width: f64::NAN,
                crossed: false,
                wall_ms,
                error: Some(e.to_string()),
            },
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub task: String,
    pub n: usize,
    pub notion: String,
    pub budget: Option<f64>,
    pub variant: String,
    pub repeats: usize,
    pub cp: f64,
    pub mean_width: f64,
    pub sd_width: f64,
    pub crossed_count: usize,
    pub failed_count: usize,
    pub mean_ms: Option<f64>,
}

/// Coverage over all trials; width mean and sample SD over trials that
/// neither crossed nor failed.
pub fn aggregate(task: &str, reports: &[TrialReport]) -> Result<CellSummary> {
    let first = reports.first().ok_or_else(|| invalid("no trial reports"))?;
    let (notion, budget, variant) = match first.kind {
        CellKind::NonPrivate => ("none".to_string(), None, "posterior".to_string()),
        CellKind::Private { budget, variant } => {
            (budget.notion().to_string(), Some(budget.primary()), variant.label().to_string())
        }
    };
    let cp = reports.iter().filter(|r| r.covered).count() as f64 / reports.len() as f64;
    let widths: Vec<f64> = reports.iter().filter(|r| !r.crossed && r.error.is_none()).map(|r| r.width).collect();
    let (mean_width, sd_width) = match widths.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (widths[0], f64::NAN),
        k => {
            let mean = widths.iter().sum::<f64>() / k as f64;
            let var = widths.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (mean, var.sqrt())
        }
    };
    let times: Vec<f64> = reports.iter().filter_map(|r| r.wall_ms).collect();
    let mean_ms = (times.len() == reports.len()).then(|| times.iter().sum::<f64>() / times.len() as f64);
    Ok(CellSummary {
        task: task.to_string(),
        n: first.n,
        notion,
        budget,
        variant,
        repeats: reports.len(),
        cp,
        mean_width,
        sd_width,
        crossed_count: reports.iter().filter(|r| r.crossed).count(),
        failed_count: reports.iter().filter(|r| r.error.is_some()).count(),
        mean_ms,
    })
}

/// Runs every cell of the configuration in order.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<CellSummary>> {
    cfg.validate()?;
    let mut out = Vec::new();
    let mut plan: Option<HistogramPlan> = None;
    for cell in cfg.cells() {
        if plan.as_ref().map(|p| p.n) != Some(cfg.n_grid[cell.n_index]) {
            plan = Some(cfg.histogram_plan(cell.n_index)?);
        }
        let reports = run_cell(cfg, plan.as_ref().expect("set above"), &cell);
        out.push(aggregate(cfg.task.name(), &reports)?);
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "task,n,notion,budget,variant,repeats,cp,mean_width,sd_width,crossed_count,mean_ms";

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => "NA".to_string(),
    }
}

/// One header line plus one line per cell, LF-terminated.
pub fn to_csv(rows: &[CellSummary]) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.task,
            r.n,
            r.notion,
            fmt_opt(r.budget),
            r.variant,
            r.repeats,
            r.cp,
            fmt_opt(Some(r.mean_width)),
            fmt_opt(Some(r.sd_width)),
            r.crossed_count,
            fmt_opt(r.mean_ms),
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub task: String,
    pub n: usize,
    pub gn_numeric: f64,
    pub g0_analytic: f64,
    pub g0_upper_bound: Option<f64>,
}

/// Numeric, analytic and upper-bound sensitivity side by side over `n_grid`.
pub fn sensitivity_study(
    task: &Task,
    n_grid: &[usize],
    bounds: &DataBounds,
    gn: &GnConfig,
    upper: &UpperBoundConfig,
    master_seed: u64,
) -> Result<Vec<SensitivityRow>> {
    let g0 = g0_analytic(task, bounds)?;
    let gbar = g0_upper_bound(task, bounds, upper).ok();
    n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let stream = SeedStream::new(master_seed).path(&[i as u64]);
            Ok(SensitivityRow {
                task: task.name().to_string(),
                n,
                gn_numeric: gn_numeric(task, n, bounds, gn, stream)?,
                g0_analytic: g0,
                g0_upper_bound: gbar,
            })
        })
        .collect()
}

pub fn sensitivity_csv(rows: &[SensitivityRow]) -> String {
    let mut s = String::from("task,n,gn_numeric,g0_analytic,g0_upper_bound\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.task, r.n, r.gn_numeric, r.g0_analytic, fmt_opt(r.g0_upper_bound));
    }
    s
}

/// Releases `repeats` intervals from one fixed posterior, each with fresh
/// posterior samples and noise from substream `t` of `stream`.
#[allow(clippy::too_many_arguments)]
pub fn release_repeated(
    model: &PosteriorModel,
    spec: &HistogramSpec,
    budget: &HistogramBudget,
    variant: PreciseVariant,
    alpha: f64,
    repeats: usize,
    stream: SeedStream,
    mode: ExecutionMode,
) -> Vec<Result<IntervalEstimate>> {
    map_indices(repeats, mode, |t| {
        let s = stream.child(t as u64);
        let hist = p3_histogram(model, spec, budget, &mut s.child(1).rng(), &mut s.child(2).rng())?;
        release_interval(&hist, alpha, variant, &mut s.child(3).rng())
    })
}
