//! Command-line front end. Exit codes: 0 success, 1 computation failure,
//! 2 usage error (bad flags, missing input files).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bgp::{fit_bgp, sample_bgp, BgpParams, BgpPrior};
use crate::bootstrap::{
    bootstrap_chi_bands, nonparam_bootstrap_with, param_bootstrap_with,
};
use crate::dependence::{chi_curve, level_grid, ChiCurve, MC_FIT_SIZE, MC_REFERENCE_SIZE};
use crate::error::Error;
use crate::ingest::{self, exceedance_set, parse_season, season_filter, weekly_maxima, ThresholdInfo};
use crate::model::{SbgpParams, SbgpParamsJson, CANONICAL_NAMES};
use crate::nbe::{
    estimate, load_weights, save_weights, train, NetworkWeights, OutputHead, PriorConfig,
    SimulationPrior, TrainConfig,
};
use crate::rng::RngState;
use crate::sample::{format_f64, Sample};
use crate::stats::quantile_sorted;

#[derive(Debug, Parser)]
#[command(name = "sbgp", version, about = "Sub-asymptotic bivariate GP toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a sample from a parameter file.
    Simulate(SimulateArgs),
    /// Apply trained weights to a dataset.
    Fit(FitArgs),
    /// Train an estimator on simulated data.
    Train(TrainArgs),
    /// Empirical χ(q) curve of a dataset.
    ChiCurve(ChiCurveArgs),
    /// Bootstrap replicates of the estimator.
    Bootstrap(BootstrapArgs),
    /// Daily CSV to an exceedance set.
    Ingest(IngestArgs),
    /// Fit every site against a reference site.
    BatchFit(BatchFitArgs),
    /// Fit the sBGP and BGP models to the same data.
    Compare(CompareArgs),
    /// Empirical against fitted marginal quantiles.
    Qq(QqArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    Sbgp,
    Bgp,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Model::Sbgp)]
    model: Model,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Require weights trained with the penalized loss.
    #[arg(long)]
    penalized: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    prior: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Model::Sbgp)]
    model: Model,
    /// Validation risk trace, `step,risk`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ChiCurveArgs {
    #[arg(long)]
    data: PathBuf,
    /// `lo:hi:count` or a comma-separated list.
    #[arg(long, default_value = "0.5:0.99:50")]
    levels: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    eta: bool,
}

#[derive(Debug, Args)]
struct BootstrapArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    #[arg(short = 'B', long = "replicates", default_value_t = 200)]
    b: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Resample from the fitted model instead of the data.
    #[arg(long)]
    parametric: bool,
    /// Interval summary as JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Pointwise χ(q) bands, `q,lower,median,upper`.
    #[arg(long)]
    bands: Option<PathBuf>,
    #[arg(long, default_value = "0.5:0.99:50")]
    band_levels: String,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value = "date")]
    date_col: String,
    /// Two value columns, `a,b`.
    #[arg(long)]
    cols: String,
    #[arg(long)]
    weekly: bool,
    /// `MM-DD:MM-DD`, inclusive.
    #[arg(long)]
    season: Option<String>,
    #[arg(long, default_value_t = 0.7)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BatchFitArgs {
    #[arg(long)]
    csv_dir: PathBuf,
    #[arg(long)]
    ref_col: String,
    #[arg(long, default_value = "date")]
    date_col: String,
    #[arg(long, default_value_t = 0.7)]
    level: f64,
    #[arg(long)]
    weekly: bool,
    #[arg(long)]
    season: Option<String>,
    #[arg(long)]
    weights: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    sbgp_weights: PathBuf,
    #[arg(long)]
    bgp_weights: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "0.5:0.99:50")]
    levels: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct QqArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Failure(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Failure(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn input(path: &Path) -> CliResult<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        usage(format!("input file not found: {}", path.display()))
    }
}

/// Runs the command line `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            2
        }
        Err(CliError::Failure(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Train(a) => train_cmd(a),
        Command::ChiCurve(a) => chi_curve_cmd(a),
        Command::Bootstrap(a) => bootstrap(a),
        Command::Ingest(a) => ingest_cmd(a),
        Command::BatchFit(a) => batch_fit(a),
        Command::Compare(a) => compare(a),
        Command::Qq(a) => qq(a),
    }
}

/// Parses `lo:hi:count` or `q1,q2,...`.
pub fn parse_levels(spec: &str) -> crate::error::Result<Vec<f64>> {
    let bad = || Error::Domain(format!("cannot parse levels {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [lo, hi, count] => {
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            let count: usize = count.trim().parse().map_err(|_| bad())?;
            level_grid(lo, hi, count)
        }
        [list] => {
            let v = list
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<crate::error::Result<Vec<_>>>()?;
            ChiCurve::new(v.clone(), vec![0.0; v.len()])?;
            Ok(v)
        }
        _ => Err(bad()),
    }
}

fn levels_arg(spec: &str) -> CliResult<Vec<f64>> {
    parse_levels(spec).map_err(|e| CliError::Usage(e.to_string()))
}

/// Location of the threshold metadata written next to an exceedance file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("thresholds.json")
}

/// Sibling output path `<stem>.<suffix>` next to `out`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

fn read_text(path: &Path) -> CliResult<String> {
    Ok(std::fs::read_to_string(input(path)?).map_err(Error::from)?)
}

fn load_sample(path: &Path) -> CliResult<Sample> {
    Ok(Sample::load_csv(input(path)?)?)
}

fn load_net(path: &Path) -> CliResult<NetworkWeights> {
    Ok(load_weights(input(path)?)?)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(Error::from)?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let text = read_text(&a.params)?;
    let mut rng = RngState::seed_from_u64(a.seed);
    let s = match a.model {
        Model::Sbgp => SbgpParams::from_json(&text)?.sample(a.n, &mut rng)?,
        Model::Bgp => sample_bgp(&BgpParams::from_json(&text)?, a.n, &mut rng)?,
    };
    s.save_csv(&a.out)?;
    info!("wrote {} rows to {}", s.len(), a.out.display());
    Ok(())
}

/// Contents of `fit.json` for sBGP weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRecord {
    #[serde(flatten)]
    pub params: SbgpParamsJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2_star: Option<f64>,
    /// Raw network output in canonical order.
    pub estimate: Vec<f64>,
    pub param_order: Vec<String>,
    pub n: usize,
}

impl FitRecord {
    pub fn new(theta_hat: &[f64], n: usize) -> crate::error::Result<Self> {
        let p = SbgpParams::from_canonical_projected(theta_hat)?;
        Ok(Self {
            params: SbgpParamsJson::from(&p),
            beta1_star: p.beta_star(1),
            beta2_star: p.beta_star(2),
            estimate: theta_hat.to_vec(),
            param_order: CANONICAL_NAMES.iter().map(|s| s.to_string()).collect(),
            n,
        })
    }

    pub fn params(&self) -> crate::error::Result<SbgpParams> {
        let j = &self.params;
        SbgpParams::new(j.alpha, j.alpha1, j.alpha2, j.beta1, j.beta2, j.sigma_t, j.w)
    }
}

fn fit(a: FitArgs) -> CliResult<()> {
    let w = load_net(&a.weights)?;
    let s = load_sample(&a.data)?;
    if a.penalized && w.loss_lambda <= 0.0 {
        return usage(format!(
            "--penalized needs weights trained with lambda > 0; {} has lambda = {}",
            a.weights.display(),
            w.loss_lambda
        ));
    }
    let text = match w.head {
        OutputHead::Sbgp => {
            let e = estimate(&w, &s)?;
            serde_json::to_string_pretty(&FitRecord::new(&e.theta_hat, s.len())?)
                .map_err(Error::from)?
        }
        OutputHead::Bgp => fit_bgp(&s, &w)?.to_json()?,
    };
    write_text(&a.out, &text)
}

fn train_cmd(a: TrainArgs) -> CliResult<()> {
    let cfg: TrainConfig = match &a.config {
        Some(p) => serde_json::from_str(&read_text(p)?).map_err(Error::from)?,
        None => TrainConfig::default(),
    };
    let prior_text = a.prior.as_deref().map(read_text).transpose()?;
    let prior: Box<dyn SimulationPrior> = match a.model {
        Model::Sbgp => {
            let p: PriorConfig = match &prior_text {
                Some(t) => serde_json::from_str(t).map_err(Error::from)?,
                None => PriorConfig::default(),
            };
            p.validate()?;
            Box::new(p)
        }
        Model::Bgp => {
            let p: BgpPrior = match &prior_text {
                Some(t) => serde_json::from_str(t).map_err(Error::from)?,
                None => BgpPrior::default(),
            };
            p.validate()?;
            Box::new(p)
        }
    };
    let mut rng = RngState::seed_from_u64(a.seed);
    let report = train(prior.as_ref(), &cfg, &mut rng)?;
    save_weights(&report.weights, &a.out)?;
    if let Some(path) = &a.trace {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(Error::from)?);
        let mut body = String::from("step,risk\n");
        for v in &report.validation {
            body.push_str(&format!("{},{}\n", v.step, format_f64(v.risk)));
        }
        f.write_all(body.as_bytes()).map_err(Error::from)?;
    }
    info!(
        "trained {} steps ({} redraws), wrote {}",
        report.steps_run,
        report.redraws,
        a.out.display()
    );
    Ok(())
}

fn chi_curve_cmd(a: ChiCurveArgs) -> CliResult<()> {
    let levels = levels_arg(&a.levels)?;
    let s = load_sample(&a.data)?;
    chi_curve(&s, &levels)?.save_csv(&a.out, a.eta)?;
    Ok(())
}

fn bootstrap(a: BootstrapArgs) -> CliResult<()> {
    let w = load_net(&a.weights)?;
    let s = load_sample(&a.data)?;
    let band_levels = match a.bands {
        Some(_) => Some(levels_arg(&a.band_levels)?),
        None => None,
    };
    if w.head != OutputHead::Sbgp {
        return usage("bootstrap needs sbgp weights");
    }
    let rng = RngState::seed_from_u64(a.seed);
    let refit = |x: &Sample| Ok(estimate(&w, x)?.theta_hat.to_vec());
    let result = if a.parametric {
        let p = estimate(&w, &s)?.to_params()?;
        let n = s.len();
        param_bootstrap_with(|r| p.sample(n, r), refit, &CANONICAL_NAMES, a.b, a.level, &rng)?
    } else {
        nonparam_bootstrap_with(&s, refit, &CANONICAL_NAMES, a.b, a.level, &rng)?
    };
    result.save_csv(&a.out)?;
    if let Some(path) = &a.summary {
        write_text(path, &result.summary_json()?)?;
    }
    if let (Some(path), Some(levels)) = (&a.bands, band_levels) {
        let bands = bootstrap_chi_bands(&result, &levels, MC_FIT_SIZE, &rng.substream(u64::MAX))?;
        bands.write_csv(std::fs::File::create(path).map_err(Error::from)?)?;
    }
    Ok(())
}

fn season_arg(s: &Option<String>) -> CliResult<Option<(ingest::MonthDay, ingest::MonthDay)>> {
    s.as_deref()
        .map(parse_season)
        .transpose()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn prepare(
    series: ingest::BivariateSeries,
    weekly: bool,
    season: Option<(ingest::MonthDay, ingest::MonthDay)>,
) -> ingest::BivariateSeries {
    let mut s = series;
    if weekly {
        s = weekly_maxima(&s);
    }
    if let Some((start, end)) = season {
        s = season_filter(&s, start, end);
    }
    s
}

fn ingest_cmd(a: IngestArgs) -> CliResult<()> {
    let cols: Vec<&str> = a.cols.split(',').map(str::trim).collect();
    if cols.len() != 2 {
        return usage(format!("--cols needs exactly two columns, got {:?}", a.cols));
    }
    let season = season_arg(&a.season)?;
    let path = input(&a.csv)?;
    let headers = ingest::csv_headers(path)?;
    for c in cols.iter().chain(std::iter::once(&a.date_col.as_str())) {
        if !headers.iter().any(|h| h == c) {
            return usage(format!("column {c:?} not found in {}", path.display()));
        }
    }
    let (series, report) = ingest::load_csv(path, &a.date_col, &cols)?;
    if report.rows_dropped_missing > 0 {
        warn!("dropped {} rows with missing values", report.rows_dropped_missing);
    }
    let series = prepare(series, a.weekly, season);
    let ex = exceedance_set(&series, a.level)?;
    ex.excesses().save_csv(&a.out)?;
    let info = ex.info();
    write_text(
        &sidecar_path(&a.out),
        &serde_json::to_string_pretty(&info).map_err(Error::from)?,
    )?;
    info!(
        "retained {} of {} rows above the {} quantiles",
        info.retained, info.total_n, info.level
    );
    Ok(())
}

fn batch_fit(a: BatchFitArgs) -> CliResult<()> {
    if !a.csv_dir.is_dir() {
        return usage(format!("directory not found: {}", a.csv_dir.display()));
    }
    let w = load_net(&a.weights)?;
    if w.head != OutputHead::Sbgp {
        return usage("batch-fit needs sbgp weights");
    }
    let season = season_arg(&a.season)?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&a.csv_dir)
        .map_err(Error::from)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let mut jobs = Vec::new();
    for f in &files {
        let headers = ingest::csv_headers(f)?;
        if !headers.iter().any(|h| *h == a.ref_col) {
            warn!("{} has no column {:?}; skipped", f.display(), a.ref_col);
            continue;
        }
        for h in headers {
            if h != a.ref_col && h != a.date_col {
                jobs.push((f.clone(), h));
            }
        }
    }
    if jobs.is_empty() {
        return usage(format!("no site columns paired with {:?}", a.ref_col));
    }
    let rows = jobs
        .par_iter()
        .map(|(f, site)| {
            let (series, _) = ingest::load_csv(f, &a.date_col, &[a.ref_col.as_str(), site])?;
            let ex = exceedance_set(&prepare(series, a.weekly, season), a.level)?;
            let e = estimate(&w, &ex.excesses())?;
            Ok((site.clone(), e.theta_hat))
        })
        .collect::<crate::error::Result<Vec<_>>>()?;
    let mut body = format!("site,{}\n", CANONICAL_NAMES.join(","));
    for (site, t) in rows {
        let cells: Vec<String> = t.iter().map(|v| format_f64(*v)).collect();
        body.push_str(&format!("{},{}\n", site, cells.join(",")));
    }
    write_text(&a.out, &body)
}

/// Empirical and model quantile pairs per margin at plotting positions
/// `i/(m+1)`, with `shift` added to both.
fn qq_rows(
    data: &Sample,
    model_quantile: &dyn Fn(usize, f64) -> crate::error::Result<f64>,
    shift: [f64; 2],
) -> crate::error::Result<Vec<(usize, f64, f64, f64)>> {
    let m = data.len();
    let mut out = Vec::with_capacity(2 * m);
    for j in 0..2 {
        let mut col = data.column(j);
        col.sort_by(f64::total_cmp);
        for (i, y) in col.iter().enumerate() {
            let p = (i + 1) as f64 / (m + 1) as f64;
            out.push((j + 1, p, y + shift[j], model_quantile(j, p)? + shift[j]));
        }
    }
    Ok(out)
}

fn write_qq(path: &Path, rows: &[(usize, f64, f64, f64)]) -> CliResult<()> {
    let mut body = String::from("margin,p,empirical,model\n");
    for (j, p, e, m) in rows {
        body.push_str(&format!("{j},{},{},{}\n", format_f64(*p), format_f64(*e), format_f64(*m)));
    }
    write_text(path, &body)
}

fn load_thresholds(data: &Path) -> CliResult<[f64; 2]> {
    let side = sidecar_path(data);
    if !side.is_file() {
        warn!("no threshold file {}; quantiles left on the excess scale", side.display());
        return Ok([0.0; 2]);
    }
    let info: ThresholdInfo = serde_json::from_str(&read_text(&side)?).map_err(Error::from)?;
    Ok([info.u1, info.u2])
}

fn qq(a: QqArgs) -> CliResult<()> {
    let data = load_sample(&a.data)?;
    let rec: FitRecord = serde_json::from_str(&read_text(&a.fit)?).map_err(Error::from)?;
    let p = rec.params()?;
    let margins = [p.marginal(1)?, p.marginal(2)?];
    let u = load_thresholds(&a.data)?;
    let rows = qq_rows(&data, &|j, q| margins[j].quantile(q), u)?;
    write_qq(&a.out, &rows)
}

#[derive(Debug, Serialize)]
struct CompareRecord {
    n: usize,
    thresholds: [f64; 2],
    sbgp: FitRecord,
    bgp: BgpParams,
    chi_csv: String,
    qq_csv: String,
}

fn compare(a: CompareArgs) -> CliResult<()> {
    let levels = levels_arg(&a.levels)?;
    let data = load_sample(&a.data)?;
    let ws = load_net(&a.sbgp_weights)?;
    let wb = load_net(&a.bgp_weights)?;
    let u = load_thresholds(&a.data)?;
    let rng = RngState::seed_from_u64(a.seed);

    let rec = FitRecord::new(&estimate(&ws, &data)?.theta_hat, data.len())?;
    let ps = rec.params()?;
    let pb = fit_bgp(&data, &wb)?;

    let sim_s = ps.sample(MC_REFERENCE_SIZE, &mut rng.substream(0))?;
    let sim_b = sample_bgp(&pb, MC_REFERENCE_SIZE, &mut rng.substream(1))?;
    let emp = chi_curve(&data, &levels)?;
    let cs = chi_curve(&sim_s, &levels)?;
    let cb = chi_curve(&sim_b, &levels)?;
    let chi_path = sibling(&a.out, "chi.csv");
    let mut body = String::from("q,empirical,sbgp,bgp\n");
    for k in 0..levels.len() {
        body.push_str(&format!(
            "{},{},{},{}\n",
            format_f64(levels[k]),
            format_f64(emp.values[k]),
            format_f64(cs.values[k]),
            format_f64(cb.values[k])
        ));
    }
    write_text(&chi_path, &body)?;

    let margins = [ps.marginal(1)?, ps.marginal(2)?];
    let sorted_b: Vec<Vec<f64>> = (0..2)
        .map(|j| {
            let mut c = sim_b.column(j);
            c.sort_by(f64::total_cmp);
            c
        })
        .collect();
    let rows_s = qq_rows(&data, &|j, q| margins[j].quantile(q), u)?;
    let rows_b = qq_rows(&data, &|j, q| Ok(quantile_sorted(&sorted_b[j], q)), u)?;
    let qq_path = sibling(&a.out, "qq.csv");
    let mut body = String::from("model,margin,p,empirical,fitted\n");
    for (name, rows) in [("sbgp", &rows_s), ("bgp", &rows_b)] {
        for (j, p, e, m) in rows {
            body.push_str(&format!(
                "{name},{j},{},{},{}\n",
                format_f64(*p),
                format_f64(*e),
                format_f64(*m)
            ));
        }
    }
    write_text(&qq_path, &body)?;

    let out = CompareRecord {
        n: data.len(),
        thresholds: u,
        sbgp: rec,
        bgp: pb,
        chi_csv: chi_path.display().to_string(),
        qq_csv: qq_path.display().to_string(),
    };
    write_text(&a.out, &serde_json::to_string_pretty(&out).map_err(Error::from)?)
}
