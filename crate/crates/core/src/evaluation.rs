//! Metrics over seed ensembles: weight distance, tail probabilities, test MSE,
//! eigenvalue diagnostics and their aggregation into per-configuration
//! summaries, plus the CSV layouts the harness writes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// Minimum absolute Hessian eigenvalue below which a trial counts as hitting
/// the small-eigenvalue pathology.
pub const PATHOLOGY_THRESHOLD: f64 = 1e-2;

pub const DEFAULT_BETAS: [f64; 4] = [0.05, 0.1, 0.2, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Ols,
    Dgm,
    Rmgm,
    Bgm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ols, Method::Dgm, Method::Rmgm, Method::Bgm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ols => "OLS",
            Method::Dgm => "DGM",
            Method::Rmgm => "RMGM",
            Method::Bgm => "BGM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "OLS" => Ok(Method::Ols),
            "DGM" => Ok(Method::Dgm),
            "RMGM" => Ok(Method::Rmgm),
            "BGM" => Ok(Method::Bgm),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// What a trial was scored on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// `‖ŵ - w*‖` on synthetic data.
    Distance(f64),
    /// Mean squared error on a held-out test set.
    TestMse(f64),
    /// The trainer rejected its system as singular.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentKind {
    Synthetic,
    Real,
}

impl ExperimentKind {
    fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Synthetic => "synthetic",
            ExperimentKind::Real => "real",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub kind: ExperimentKind,
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub k: Option<usize>,
    /// `None` for the non-private baseline.
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub outcome: Outcome,
    /// Minimum absolute eigenvalue of the trained (regularized) Hessian; on
    /// failure, the value carried by the singular-system error.
    pub min_abs_eig: f64,
    pub wall_time: f64,
    pub error: Option<String>,
}

impl TrialReport {
    pub fn distance(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Distance(x) => Some(x),
            _ => None,
        }
    }

    pub fn test_mse(&self) -> Option<f64> {
        match self.outcome {
            Outcome::TestMse(x) => Some(x),
            _ => None,
        }
    }
}

pub fn weight_distance(w_hat: &DVector<f64>, w_star: &DVector<f64>) -> Result<f64> {
    if w_hat.len() != w_star.len() {
        return Err(Error::Dimension(format!(
            "weight vectors of length {} and {}",
            w_hat.len(),
            w_star.len()
        )));
    }
    Ok((w_hat - w_star).norm())
}

/// Fraction of `distances` strictly greater than `beta`.
pub fn tail_probability(distances: &[f64], beta: f64) -> Result<f64> {
    if distances.is_empty() {
        return Err(Error::Empty("no distances"));
    }
    let above = distances.iter().filter(|&&x| x > beta).count();
    Ok(above as f64 / distances.len() as f64)
}

/// `(1/n_test) Σ (wᵀxᵢ - yᵢ)²`.
pub fn test_mse(w: &DVector<f64>, test: &DataMatrix) -> Result<f64> {
    if test.n() == 0 {
        return Err(Error::Empty("test set"));
    }
    if w.len() != test.d() {
        return Err(Error::Dimension(format!(
            "{} weights for {} features",
            w.len(),
            test.d()
        )));
    }
    let resid = test.features() * w - test.labels();
    Ok(resid.norm_squared() / test.n() as f64)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample standard deviation over `sqrt(count)`; NaN below two samples.
pub fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &p in &idx[i..=j] {
            out[p] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Summary of one `(kind, method, n, ε, k)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub kind: ExperimentKind,
    pub method: Method,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub trials: usize,
    pub failures: usize,
    /// `(β, P[distance > β])`; failed trials count as exceeding every β.
    /// Empty for real-data groups.
    pub tail_probs: Vec<(f64, f64)>,
    /// Mean, median and standard error of the distance (synthetic) or test
    /// MSE (real) over successful trials.
    pub mean: f64,
    pub median: f64,
    pub std_error: f64,
    /// Fraction of trials whose min |eigenvalue| fell below the pathology threshold.
    pub pathology_rate: f64,
}

type GroupKey = (ExperimentKind, Method, usize, Option<u64>, Option<usize>);

/// Group trials by `(kind, method, n, ε, k)` and summarize each group.
///
/// Trials are sorted by seed inside each group first, so the output depends
/// only on the multiset of trials.
pub fn aggregate(trials: &[TrialReport], betas: &[f64]) -> Result<Vec<AggregateReport>> {
    let mut groups: BTreeMap<GroupKey, Vec<&TrialReport>> = BTreeMap::new();
    for t in trials {
        // ε > 0, so the IEEE bit pattern orders like the value.
        let key = (t.kind, t.method, t.n, t.epsilon.map(f64::to_bits), t.k);
        groups.entry(key).or_default().push(t);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((kind, method, n, _, k), mut group) in groups {
        group.sort_by(|a, b| a.seed.cmp(&b.seed).then(a.min_abs_eig.total_cmp(&b.min_abs_eig)));
        let first = group[0];
        let mut values = Vec::with_capacity(group.len());
        let mut failures = 0;
        for t in &group {
            match (kind, t.outcome) {
                (_, Outcome::Failed) => failures += 1,
                (ExperimentKind::Synthetic, Outcome::Distance(x)) => values.push(x),
                (ExperimentKind::Real, Outcome::TestMse(x)) => values.push(x),
                _ => {
                    return Err(Error::Config(format!(
                        "group {method} n={n} mixes experiment kinds"
                    )))
                }
            }
        }
        let tail_probs = if kind == ExperimentKind::Synthetic {
            let mut with_failures = values.clone();
            with_failures.extend(std::iter::repeat_n(f64::INFINITY, failures));
            betas
                .iter()
                .map(|&b| Ok((b, tail_probability(&with_failures, b)?)))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let pathological = group
            .iter()
            .filter(|t| t.min_abs_eig < PATHOLOGY_THRESHOLD)
            .count();
        let (mean_v, median_v, se) = if values.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            (mean(&values), median(&values), standard_error(&values))
        };
        out.push(AggregateReport {
            kind,
            method,
            n,
            d: first.d,
            m: first.m,
            k,
            epsilon: first.epsilon,
            delta: first.delta,
            trials: group.len(),
            failures,
            tail_probs,
            mean: mean_v,
            median: median_v,
            std_error: se,
            pathology_rate: pathological as f64 / group.len() as f64,
        });
    }
    Ok(out)
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn opt_usize(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub const TRIALS_HEADER: &str =
    "kind,method,seed,n,d,m,k,epsilon,delta,distance,test_mse,min_abs_eig,status";

/// One row per trial. Wall times are deliberately absent so that identical
/// runs produce identical files; see [`timings_csv`].
pub fn trials_csv(trials: &[TrialReport]) -> String {
    let mut s = String::from(TRIALS_HEADER);
    s.push('\n');
    for t in trials {
        let status = match &t.error {
            None => "ok".to_string(),
            Some(e) => format!("\"{}\"", e.replace('"', "'")),
        };
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            t.kind.as_str(),
            t.method,
            t.seed,
            t.n,
            t.d,
            t.m,
            opt_usize(t.k),
            opt_f64(t.epsilon),
            opt_f64(t.delta),
            opt_f64(t.distance()),
            opt_f64(t.test_mse()),
            fmt_f64(t.min_abs_eig),
            status
        ));
    }
    s
}

pub fn timings_csv(trials: &[TrialReport]) -> String {
    let mut s = String::from("method,seed,n,k,epsilon,wall_time_s\n");
    for t in trials {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.method,
            t.seed,
            t.n,
            opt_usize(t.k),
            opt_f64(t.epsilon),
            fmt_f64(t.wall_time)
        ));
    }
    s
}

/// One row per aggregate group; tail probabilities get one column per β,
/// named `tail_prob_<β>`.
pub fn aggregates_csv(reports: &[AggregateReport], betas: &[f64]) -> String {
    let mut s = String::from(
        "kind,method,n,d,m,k,epsilon,delta,trials,failures,mean,median,std_error,pathology_rate",
    );
    for b in betas {
        s.push_str(&format!(",tail_prob_{b}"));
    }
    s.push('\n');
    for r in reports {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.kind.as_str(),
            r.method,
            r.n,
            r.d,
            r.m,
            opt_usize(r.k),
            opt_f64(r.epsilon),
            opt_f64(r.delta),
            r.trials,
            r.failures,
            fmt_f64(r.mean),
            fmt_f64(r.median),
            fmt_f64(r.std_error),
            fmt_f64(r.pathology_rate)
        ));
        for b in betas {
            let p = r.tail_probs.iter().find(|(x, _)| x == b).map(|(_, p)| *p);
            s.push(',');
            s.push_str(&opt_f64(p));
        }
        s.push('\n');
    }
    s
}
