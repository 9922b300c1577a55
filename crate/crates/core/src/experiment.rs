//! Experiment protocols behind the command-line tool: the synthetic
//! convergence sweep, the real-data evaluation, and dataset export.
//!
//! A run is a pure function of its [`Config`] (root seed included). Work is
//! split into independent units executed on a rayon pool; results are
//! collected in unit order and written once at the end, so thread count
//! never changes the output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::baselines::{bgm_train, ols_train};
use crate::data::{normalize_minmax, partition_evenly, split_train_test, DataMatrix, PartyPartition};
use crate::dgm::{dgm_release, dgm_train};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate, aggregates_csv, test_mse, timings_csv, trials_csv, weight_distance,
    AggregateReport, ExperimentKind, Method, Outcome, TrialReport, DEFAULT_BETAS,
};
use crate::io::{self, fmt_f64};
use crate::privacy::{calibrate, PrivacyParams};
use crate::rmgm::{choose_k, rmgm_release, rmgm_train, KMode, DEFAULT_K_GRID};
use crate::rng::{self, Purpose};
use crate::synthetic::{add_label_noise, gen_dataset, gen_ground_truth, GroundTruth};

pub const DEFAULT_N_GRID: [usize; 4] = [10_000, 30_000, 100_000, 300_000];
pub const FULL_N_GRID: [usize; 6] = [10_000, 30_000, 100_000, 300_000, 1_000_000, 3_000_000];
pub const FULL_SEEDS: usize = 1000;
pub const DEFAULT_REAL_SEEDS: usize = 20;

/// Run configuration. Parsed from `key = value` lines; `#` starts a comment
/// and list values are comma separated.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub methods: Vec<Method>,
    pub n_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub delta: f64,
    pub d: usize,
    pub m: usize,
    pub seeds: usize,
    pub betas: Vec<f64>,
    pub k_mode: KMode,
    pub lambda: f64,
    pub label_column: Option<String>,
    pub csv_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub strict: bool,
    pub root_seed: u64,
    pub workers: usize,
    /// Standard deviation of optional label noise for synthetic data; 0 keeps
    /// labels noiseless as in the reference protocol.
    pub label_noise: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            methods: Method::ALL.to_vec(),
            n_grid: DEFAULT_N_GRID.to_vec(),
            eps_grid: vec![1.0, 0.3, 0.1],
            delta: 1e-5,
            d: 10,
            m: 6,
            seeds: 200,
            betas: DEFAULT_BETAS.to_vec(),
            k_mode: KMode::Synthetic,
            lambda: 1e-5,
            label_column: None,
            csv_path: None,
            out_dir: PathBuf::from("results"),
            strict: false,
            root_seed: 0,
            workers: 1,
            label_noise: 0.0,
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {s:?}")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true/false, got {v:?}"))),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl Config {
    /// Defaults for the real-data protocol: k swept over the candidate grid,
    /// 20 seeds per cell.
    pub fn real_defaults() -> Self {
        Config {
            k_mode: KMode::Grid(DEFAULT_K_GRID.to_vec()),
            seeds: DEFAULT_REAL_SEEDS,
            ..Config::default()
        }
    }

    /// Apply `key = value` lines on top of `self`.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        let mut k_grid: Option<Vec<usize>> = None;
        let mut k_mode: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                msg: format!("expected key = value, got {line:?}"),
                row: Some(lineno + 1),
                col: None,
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "methods" => self.methods = parse_list(key, value)?,
                "n_grid" => self.n_grid = parse_list(key, value)?,
                "eps_grid" => self.eps_grid = parse_list(key, value)?,
                "delta" => self.delta = parse_one(key, value)?,
                "d" => self.d = parse_one(key, value)?,
                "m" => self.m = parse_one(key, value)?,
                "seeds" => self.seeds = parse_one(key, value)?,
                "betas" => self.betas = parse_list(key, value)?,
                "k_mode" => k_mode = Some(value.to_ascii_lowercase()),
                "k_grid" => k_grid = Some(parse_list(key, value)?),
                "lambda" => self.lambda = parse_one(key, value)?,
                "label_column" => self.label_column = Some(value.to_string()),
                "csv_path" => self.csv_path = Some(PathBuf::from(value)),
                "out_dir" => self.out_dir = PathBuf::from(value),
                "strict" => self.strict = parse_bool(key, value)?,
                "root_seed" => self.root_seed = parse_one(key, value)?,
                "workers" => self.workers = parse_one(key, value)?,
                "label_noise" => self.label_noise = parse_one(key, value)?,
                other => {
                    return Err(Error::Parse {
                        msg: format!("unknown key {other:?}"),
                        row: Some(lineno + 1),
                        col: None,
                    })
                }
            }
        }
        let grid = k_grid.unwrap_or_else(|| match &self.k_mode {
            KMode::Grid(g) => g.clone(),
            _ => DEFAULT_K_GRID.to_vec(),
        });
        match k_mode.as_deref() {
            None => {
                if let KMode::Grid(_) = self.k_mode {
                    self.k_mode = KMode::Grid(grid);
                }
            }
            Some("synthetic") => self.k_mode = KMode::Synthetic,
            Some("theorem") => self.k_mode = KMode::Theorem,
            Some("grid") => self.k_mode = KMode::Grid(grid),
            Some(other) => return Err(Error::Config(format!("unknown k_mode {other:?}"))),
        }
        Ok(self)
    }

    pub fn from_file(base: Config, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        base.apply_text(&text)
    }

    /// Switch to the full-scale grid: n up to 3·10⁶ and 1000 seeds.
    pub fn full_scale(mut self) -> Self {
        self.n_grid = FULL_N_GRID.to_vec();
        self.seeds = FULL_SEEDS;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.methods.is_empty() {
            return bad("methods must not be empty");
        }
        if self.seeds == 0 {
            return bad("seeds must be positive");
        }
        if self.workers == 0 {
            return bad("workers must be positive");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and nonnegative");
        }
        if !(self.label_noise >= 0.0 && self.label_noise.is_finite()) {
            return bad("label_noise must be finite and nonnegative");
        }
        if self.methods.iter().any(|&m| m != Method::Ols) && self.eps_grid.is_empty() {
            return bad("eps_grid must not be empty for private methods");
        }
        for &e in &self.eps_grid {
            calibrate(e, self.delta)?;
        }
        if self.betas.iter().any(|b| !b.is_finite()) {
            return bad("betas must be finite");
        }
        Ok(())
    }

    fn validate_synthetic(&self) -> Result<()> {
        self.validate()?;
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::Config("n_grid must be nonempty and positive".into()));
        }
        if self.d == 0 {
            return Err(Error::Config("d must be positive".into()));
        }
        partition_evenly(self.d + 1, self.m)?;
        Ok(())
    }

    /// The configuration as `key = value` lines, parseable by [`Config::apply_text`].
    pub fn to_text(&self) -> String {
        let (mode, grid) = match &self.k_mode {
            KMode::Synthetic => ("synthetic", None),
            KMode::Theorem => ("theorem", None),
            KMode::Grid(g) => ("grid", Some(g)),
        };
        let mut s = String::new();
        let _ = writeln!(s, "methods = {}", join(&self.methods));
        let _ = writeln!(s, "n_grid = {}", join(&self.n_grid));
        let _ = writeln!(s, "eps_grid = {}", join(&self.eps_grid));
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "seeds = {}", self.seeds);
        let _ = writeln!(s, "betas = {}", join(&self.betas));
        let _ = writeln!(s, "k_mode = {mode}");
        if let Some(g) = grid {
            let _ = writeln!(s, "k_grid = {}", join(g));
        }
        let _ = writeln!(s, "lambda = {}", self.lambda);
        if let Some(l) = &self.label_column {
            let _ = writeln!(s, "label_column = {l}");
        }
        if let Some(p) = &self.csv_path {
            let _ = writeln!(s, "csv_path = {}", p.display());
        }
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "strict = {}", self.strict);
        let _ = writeln!(s, "root_seed = {}", self.root_seed);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "label_noise = {}", self.label_noise);
        s
    }
}

/// Everything a run produces before it is written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trials: Vec<TrialReport>,
    pub aggregates: Vec<AggregateReport>,
    /// Extra `key = value` lines for `run_meta`.
    pub meta: Vec<(String, String)>,
    pub warnings: Vec<String>,
    /// Real-data runs only: best k per ε (lowest mean test MSE).
    pub best_k: Vec<BestK>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestK {
    pub epsilon: f64,
    pub k: usize,
    pub mean_mse: f64,
    pub std_error: f64,
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

struct TrialContext<'a> {
    kind: ExperimentKind,
    seed: u64,
    n: usize,
    d: usize,
    partition: &'a PartyPartition,
    strict: bool,
}

impl TrialContext<'_> {
    fn report<S>(
        &self,
        method: Method,
        k: Option<usize>,
        privacy: Option<&PrivacyParams>,
        started: Instant,
        fit: Result<(DVector<f64>, f64)>,
        score: S,
    ) -> Result<TrialReport>
    where
        S: FnOnce(&DVector<f64>) -> Result<Outcome>,
    {
        let (outcome, min_abs_eig, error) = match fit {
            Ok((w, eig)) => (score(&w)?, eig, None),
            Err(e @ Error::Singular { min_abs_eigenvalue, .. }) => {
                if self.strict {
                    return Err(e);
                }
                (Outcome::Failed, min_abs_eigenvalue, Some(e.to_string()))
            }
            Err(e) => return Err(e),
        };
        Ok(TrialReport {
            kind: self.kind,
            method,
            seed: self.seed,
            n: self.n,
            d: self.d,
            m: self.partition.m(),
            k,
            epsilon: privacy.and_then(PrivacyParams::epsilon),
            delta: privacy.and_then(PrivacyParams::delta),
            outcome,
            min_abs_eig,
            wall_time: started.elapsed().as_secs_f64(),
            error,
        })
    }
}

/// Train every configured method on one dataset. `score` turns weights into
/// the trial outcome (distance to `w*` or test MSE).
fn run_methods<S>(
    cfg: &Config,
    ctx: &TrialContext<'_>,
    train: &DataMatrix,
    release_root: u64,
    k_for: impl Fn(&PrivacyParams) -> Result<Vec<usize>>,
    score: S,
) -> Result<Vec<TrialReport>>
where
    S: Fn(&DVector<f64>) -> Result<Outcome>,
{
    let mut out = Vec::new();
    if cfg.methods.contains(&Method::Ols) {
        let t0 = Instant::now();
        let fit = ols_train(&train.features(), &train.labels(), cfg.lambda)
            .map(|f| (f.weights, f.min_abs_eigenvalue));
        out.push(ctx.report(Method::Ols, None, None, t0, fit, &score)?);
    }
    let want_dgm = cfg.methods.contains(&Method::Dgm);
    let want_bgm = cfg.methods.contains(&Method::Bgm);
    let want_rmgm = cfg.methods.contains(&Method::Rmgm);
    for &eps in &cfg.eps_grid {
        let privacy = calibrate(eps, cfg.delta)?;
        if want_dgm || want_bgm {
            let t0 = Instant::now();
            let rel = dgm_release(train, ctx.partition, &privacy, release_root)?;
            let release_time = t0.elapsed();
            if want_dgm {
                let t1 = Instant::now() - release_time;
                let fit = dgm_train(&rel, &privacy, cfg.lambda)
                    .map(|f| (f.weights, f.hessian.min_abs_eigenvalue));
                out.push(ctx.report(Method::Dgm, None, Some(&privacy), t1, fit, &score)?);
            }
            if want_bgm {
                let t1 = Instant::now() - release_time;
                let fit = bgm_train(&rel, cfg.lambda).map(|f| (f.weights, f.min_abs_eigenvalue));
                out.push(ctx.report(Method::Bgm, None, Some(&privacy), t1, fit, &score)?);
            }
        }
        if want_rmgm {
            for k in k_for(&privacy)? {
                let t0 = Instant::now();
                let rel = rmgm_release(train, ctx.partition, &privacy, k, release_root)?;
                let fit = rmgm_train(&rel, cfg.lambda).map(|f| (f.weights, f.min_abs_eigenvalue));
                out.push(ctx.report(Method::Rmgm, Some(k), Some(&privacy), t0, fit, &score)?);
            }
        }
    }
    Ok(out)
}

fn sort_trials(trials: &mut [TrialReport], cfg: &Config) {
    let eps_rank = |e: Option<f64>| {
        e.and_then(|e| cfg.eps_grid.iter().position(|&x| x == e))
            .map_or(0, |p| p + 1)
    };
    trials.sort_by(|a, b| {
        (a.method, a.n, eps_rank(a.epsilon), a.k, a.seed).cmp(&(b.method, b.n, eps_rank(b.epsilon), b.k, b.seed))
    });
}

/// Ground truth of synthetic trial `trial`. Shared by every `n`, so the
/// sweep over `n` is paired.
pub fn trial_ground_truth(root_seed: u64, trial: u64, d: usize) -> GroundTruth {
    gen_ground_truth(d, &mut rng::stream(rng::derive(root_seed, trial, 0, Purpose::GroundTruth)))
}

/// Dataset of synthetic trial `trial` at size `n`. Rows come from one stream
/// per trial, so smaller `n` gives a prefix of larger `n`.
pub fn trial_dataset(cfg: &Config, trial: u64, n: usize, truth: &GroundTruth) -> DataMatrix {
    let data = gen_dataset(
        n,
        truth,
        &mut rng::stream(rng::derive(cfg.root_seed, trial, 0, Purpose::Features)),
    );
    if cfg.label_noise > 0.0 {
        add_label_noise(
            &data,
            cfg.label_noise,
            &mut rng::stream(rng::derive(cfg.root_seed, trial, 0, Purpose::LabelNoise)),
        )
    } else {
        data
    }
}

/// Root seed of every release in trial `trial`; independent of `n` and `ε`.
pub fn trial_release_root(root_seed: u64, trial: u64) -> u64 {
    rng::derive(root_seed, trial, 0, Purpose::Release)
}

/// Synthetic convergence sweep over `(method, n, ε, seed)`.
pub fn run_synthetic(cfg: &Config) -> Result<RunOutput> {
    cfg.validate_synthetic()?;
    let partition = partition_evenly(cfg.d + 1, cfg.m)?;
    let units: Vec<(u64, usize)> = (0..cfg.seeds as u64)
        .flat_map(|t| cfg.n_grid.iter().map(move |&n| (t, n)))
        .collect();

    let mut warnings = Vec::new();
    if cfg.methods.contains(&Method::Rmgm) {
        for &eps in &cfg.eps_grid {
            let sigma = calibrate(eps, cfg.delta)?.sigma();
            for &n in &cfg.n_grid {
                for k in choose_k(n, sigma, cfg.d, partition.d_max(), &cfg.k_mode)?.candidates() {
                    if k > n {
                        warnings.push(format!("k = {k} exceeds n = {n} at epsilon = {eps}"));
                    }
                }
            }
        }
    }

    let per_unit: Vec<Result<Vec<TrialReport>>> = with_pool(cfg.workers, || {
        units
            .par_iter()
            .map(|&(t, n)| {
                let truth = trial_ground_truth(cfg.root_seed, t, cfg.d);
                let data = trial_dataset(cfg, t, n, &truth);
                let ctx = TrialContext {
                    kind: ExperimentKind::Synthetic,
                    seed: t,
                    n,
                    d: cfg.d,
                    partition: &partition,
                    strict: cfg.strict,
                };
                run_methods(
                    cfg,
                    &ctx,
                    &data,
                    trial_release_root(cfg.root_seed, t),
                    |p| Ok(choose_k(n, p.sigma(), cfg.d, partition.d_max(), &cfg.k_mode)?.candidates()),
                    |w| Ok(Outcome::Distance(weight_distance(w, &truth.w_star)?)),
                )
            })
            .collect()
    })?;
    let mut trials = Vec::new();
    for r in per_unit {
        trials.extend(r?);
    }
    sort_trials(&mut trials, cfg);
    let aggregates = aggregate(&trials, &cfg.betas)?;
    Ok(RunOutput {
        trials,
        aggregates,
        meta: vec![("partition_widths".into(), join(&partition.widths()))],
        warnings,
        best_k: Vec::new(),
    })
}

/// Real-data protocol: split 4:1, normalize with training statistics,
/// partition evenly over `m` parties, then train and score every method.
pub fn run_real(cfg: &Config) -> Result<RunOutput> {
    cfg.validate()?;
    let path = cfg
        .csv_path
        .as_ref()
        .ok_or_else(|| Error::Config("csv_path is required for real-data runs".into()))?;
    let raw = io::read_csv(path, cfg.label_column.as_deref())?;
    let partition = partition_evenly(raw.d() + 1, cfg.m)?;
    let n_total = raw.n();

    let per_seed: Vec<Result<(usize, Vec<TrialReport>)>> = with_pool(cfg.workers, || {
        (0..cfg.seeds as u64)
            .into_par_iter()
            .map(|t| {
                let mut split_rng = rng::stream(rng::derive(cfg.root_seed, t, 0, Purpose::Split));
                let (train_raw, test_raw) = split_train_test(&raw, &mut split_rng)?;
                let split = normalize_minmax(&train_raw, &test_raw)?;
                let n = split.train.n();
                let ctx = TrialContext {
                    kind: ExperimentKind::Real,
                    seed: t,
                    n,
                    d: raw.d(),
                    partition: &partition,
                    strict: cfg.strict,
                };
                let test = &split.test;
                let trials = run_methods(
                    cfg,
                    &ctx,
                    &split.train,
                    trial_release_root(cfg.root_seed, t),
                    |p| Ok(choose_k(n, p.sigma(), raw.d(), partition.d_max(), &cfg.k_mode)?.candidates()),
                    |w| Ok(Outcome::TestMse(test_mse(w, test)?)),
                )?;
                Ok((n, trials))
            })
            .collect()
    })?;

    let mut trials = Vec::new();
    let mut n_train = 0;
    for r in per_seed {
        let (n, ts) = r?;
        n_train = n;
        trials.extend(ts);
    }
    sort_trials(&mut trials, cfg);
    let aggregates = aggregate(&trials, &[])?;

    let mut warnings = Vec::new();
    let mut best_k = Vec::new();
    for &eps in &cfg.eps_grid {
        let mut best: Option<BestK> = None;
        for a in aggregates.iter().filter(|a| a.method == Method::Rmgm && a.epsilon == Some(eps)) {
            let k = a.k.unwrap_or(0);
            if k > n_train {
                warnings.push(format!("k = {k} exceeds n_train = {n_train} at epsilon = {eps}"));
            }
            if best.as_ref().is_none_or(|b| a.mean < b.mean_mse) {
                best = Some(BestK {
                    epsilon: eps,
                    k,
                    mean_mse: a.mean,
                    std_error: a.std_error,
                });
            }
        }
        best_k.extend(best);
    }

    let mut meta = vec![
        ("n_total".into(), n_total.to_string()),
        ("n_train".into(), n_train.to_string()),
        ("n_test".into(), (n_total - n_train).to_string()),
        ("d".into(), raw.d().to_string()),
        ("partition_widths".into(), join(&partition.widths())),
        ("normalization".into(), "train-only min-max to [0,1], test clamped".into()),
    ];
    if matches!(cfg.k_mode, KMode::Grid(_)) {
        meta.push((
            "k_selection".into(),
            "best k chosen by test-set MSE (optimistic: no separate validation split)".into(),
        ));
    }
    Ok(RunOutput {
        trials,
        aggregates,
        meta,
        warnings,
        best_k,
    })
}

fn best_k_csv(best: &[BestK]) -> String {
    let mut s = String::from("epsilon,k,mean_test_mse,std_error\n");
    for b in best {
        s.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(b.epsilon),
            b.k,
            fmt_f64(b.mean_mse),
            fmt_f64(b.std_error)
        ));
    }
    s
}

fn run_meta(cfg: &Config, command: &str, out: &RunOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# dpmix run metadata");
    let _ = writeln!(s, "command = {command}");
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "root_seed = {}", cfg.root_seed);
    for (k, v) in &out.meta {
        let _ = writeln!(s, "{k} = {v}");
    }
    for w in &out.warnings {
        let _ = writeln!(s, "warning = {w}");
    }
    let _ = writeln!(s, "# config");
    s.push_str(&cfg.to_text());
    s
}

/// Write `trials.csv`, `aggregates.csv`, `timings.csv`, `run_meta` and, for
/// real-data runs, `best_k.csv` into `cfg.out_dir`.
pub fn write_outputs(cfg: &Config, command: &str, out: &RunOutput) -> Result<()> {
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    io::write_file(&dir.join("trials.csv"), trials_csv(&out.trials).as_bytes())?;
    io::write_file(
        &dir.join("aggregates.csv"),
        aggregates_csv(&out.aggregates, &cfg.betas).as_bytes(),
    )?;
    io::write_file(&dir.join("timings.csv"), timings_csv(&out.trials).as_bytes())?;
    if !out.best_k.is_empty() {
        io::write_file(&dir.join("best_k.csv"), best_k_csv(&out.best_k).as_bytes())?;
    }
    io::write_file(&dir.join("run_meta"), run_meta(cfg, command, out).as_bytes())
}

pub fn cmd_synthetic(cfg: &Config) -> Result<RunOutput> {
    let out = run_synthetic(cfg)?;
    write_outputs(cfg, "synthetic", &out)?;
    Ok(out)
}

pub fn cmd_real(cfg: &Config) -> Result<RunOutput> {
    let out = run_real(cfg)?;
    write_outputs(cfg, "real", &out)?;
    Ok(out)
}

/// Paths written by [`cmd_export_synthetic`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportPaths {
    pub data: PathBuf,
    pub w_star: PathBuf,
}

/// Write trial 0's synthetic dataset of size `n` as `synthetic.csv` and its
/// ground truth as `w_star.csv` in `out_dir`.
pub fn cmd_export_synthetic(cfg: &Config, n: usize) -> Result<ExportPaths> {
    if n == 0 || cfg.d == 0 {
        return Err(Error::Config("export needs positive n and d".into()));
    }
    let truth = trial_ground_truth(cfg.root_seed, 0, cfg.d);
    let data = trial_dataset(cfg, 0, n, &truth);
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ExportPaths {
        data: dir.join("synthetic.csv"),
        w_star: dir.join("w_star.csv"),
    };
    io::write_csv(&paths.data, &data)?;
    let mut s = String::from("index,w_star\n");
    for (i, w) in truth.w_star.iter().enumerate() {
        s.push_str(&format!("{},{}\n", i + 1, fmt_f64(*w)));
    }
    io::write_file(&paths.w_star, s.as_bytes())?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_text() {
        let cfg = Config {
            methods: vec![Method::Rmgm, Method::Ols],
            k_mode: KMode::Grid(vec![5, 50]),
            label_column: Some("charges".into()),
            csv_path: Some(PathBuf::from("data/insurance.csv")),
            ..Config::default()
        };
        let back = Config::default().apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            Config::default().apply_text("bogus = 1"),
            Err(Error::Parse { row: Some(1), .. })
        ));
        assert!(matches!(
            Config::default().apply_text("seeds = many"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Config::default().apply_text("# c\nno equals sign"),
            Err(Error::Parse { row: Some(2), .. })
        ));
        let cfg = Config::default().apply_text("eps_grid = 2.0").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn default_grid_mirrors_reference_protocol() {
        let c = Config::default();
        assert_eq!((c.d, c.m, c.delta), (10, 6, 1e-5));
        assert_eq!(c.eps_grid, vec![1.0, 0.3, 0.1]);
        assert_eq!(c.k_mode, KMode::Synthetic);
        assert_eq!(c.lambda, 1e-5);
        let full = c.full_scale();
        assert_eq!(full.n_grid.last(), Some(&3_000_000));
        assert_eq!(full.seeds, 1000);
        assert_eq!(Config::real_defaults().k_mode, KMode::Grid(DEFAULT_K_GRID.to_vec()));
    }

    #[test]
    fn minimal_ols_run() {
        let cfg = Config {
            methods: vec![Method::Ols],
            n_grid: vec![1000],
            seeds: 3,
            ..Config::default()
        };
        let out = run_synthetic(&cfg).unwrap();
        assert_eq!(out.trials.len(), 3);
        assert_eq!(out.aggregates.len(), 1);
        assert!(out.trials.iter().all(|t| t.distance().unwrap() < 1e-3));
    }

    #[test]
    fn paired_design_shares_truth_across_n() {
        let cfg = Config {
            methods: vec![Method::Ols],
            n_grid: vec![50, 200],
            seeds: 2,
            ..Config::default()
        };
        let t = trial_ground_truth(cfg.root_seed, 1, cfg.d);
        let small = trial_dataset(&cfg, 1, 50, &t);
        let big = trial_dataset(&cfg, 1, 200, &t);
        assert_eq!(small.values(), &big.values().rows(0, 50).into_owned());
    }

    #[test]
    fn strict_mode_propagates_singular_systems() {
        // k = 2 < d = 3 with λ = 0 is always singular.
        let cfg = Config {
            methods: vec![Method::Rmgm],
            n_grid: vec![100],
            d: 3,
            m: 2,
            seeds: 2,
            lambda: 0.0,
            k_mode: KMode::Grid(vec![2]),
            ..Config::default()
        };
        let lenient = run_synthetic(&cfg).unwrap();
        assert!(lenient.trials.iter().all(|t| t.outcome == Outcome::Failed && t.error.is_some()));
        assert_eq!(lenient.aggregates[0].failures, 2);
        let strict = Config { strict: true, ..cfg };
        assert!(matches!(run_synthetic(&strict), Err(Error::Singular { .. })));
    }
}
