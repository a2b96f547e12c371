//! Named Monte Carlo experiments with declared tolerances.
//!
//! Every experiment farms replicas over a rayon pool, collects them in
//! replica order and aggregates sequentially, so the summary depends only on
//! the spec. Wall-clock figures are kept out of the summary and returned
//! separately.

mod blocking_exps;
mod density;
mod shock_exps;
mod step_exps;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::shock::ShockParams;

pub use blocking_exps::{tsw_check, yours_samples, TswSite};
pub use density::{density_oracle, mean_density};
pub use shock_exps::shock_farm;
pub use step_exps::step_positions;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentName {
    Twt,
    Convp,
    Indep,
    Theorem3,
    Main,
    Couplthm,
    Yours,
    Stationarity,
    Tails,
    Slowdec,
    Density,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 11] = [
        ExperimentName::Twt,
        ExperimentName::Convp,
        ExperimentName::Indep,
        ExperimentName::Theorem3,
        ExperimentName::Main,
        ExperimentName::Couplthm,
        ExperimentName::Yours,
        ExperimentName::Stationarity,
        ExperimentName::Tails,
        ExperimentName::Slowdec,
        ExperimentName::Density,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Twt => "twt",
            ExperimentName::Convp => "convp",
            ExperimentName::Indep => "indep",
            ExperimentName::Theorem3 => "theorem3",
            ExperimentName::Main => "main",
            ExperimentName::Couplthm => "couplthm",
            ExperimentName::Yours => "yours",
            ExperimentName::Stationarity => "stationarity",
            ExperimentName::Tails => "tails",
            ExperimentName::Slowdec => "slowdec",
            ExperimentName::Density => "density",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::domain(format!("unknown experiment '{s}'")))
    }
}

/// Everything an experiment reads. Fields irrelevant to a given name are ignored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub p: f64,
    pub t: f64,
    /// Time ladder for trend checks (twt, slowdec).
    pub t_ladder: Vec<f64>,
    /// M values; for slowdec the particle labels L.
    pub m_ladder: Vec<usize>,
    /// Overrides C(M) for every M of the ladder.
    pub c: Option<f64>,
    pub chi: f64,
    pub chi_prime: f64,
    pub delta: f64,
    pub kappa: f64,
    /// Arguments s of F_{M,p} (twt).
    pub s_values: Vec<f64>,
    /// Balance point (yours).
    pub z: i64,
    pub replicas: usize,
    pub seed: u64,
    /// Overrides of the default tolerances, by key.
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    /// Defaults for `name`: the reference workload of each experiment.
    pub fn defaults(name: ExperimentName) -> Self {
        let base = ShockParams::default();
        let mut spec = Self {
            name,
            p: 0.7,
            t: 600.0,
            t_ladder: vec![],
            m_ladder: vec![1],
            c: None,
            chi: base.chi,
            chi_prime: base.chi_prime,
            delta: base.delta,
            kappa: base.kappa,
            s_values: vec![],
            z: 1,
            replicas: 5000,
            seed: 1,
            tolerances: BTreeMap::new(),
            threads: None,
        };
        match name {
            ExperimentName::Twt => {
                spec.t = 1000.0;
                spec.t_ladder = vec![250.0, 1000.0];
                spec.m_ladder = vec![1, 2];
                spec.s_values = vec![1.0, 2.0, 3.0];
            }
            ExperimentName::Convp | ExperimentName::Indep => {}
            ExperimentName::Theorem3 | ExperimentName::Main | ExperimentName::Couplthm => {
                spec.m_ladder = vec![1, 2, 4];
            }
            ExperimentName::Yours => {
                spec.t = 200.0;
                spec.replicas = 20_000;
            }
            ExperimentName::Stationarity => {
                spec.t = 50.0;
                spec.replicas = 10_000;
                spec.z = 0;
            }
            ExperimentName::Tails => {
                spec.p = 0.6;
                spec.t = 100.0;
                spec.replicas = 10_000;
                spec.z = 0;
            }
            ExperimentName::Slowdec => {
                spec.t_ladder = vec![150.0, 300.0, 600.0];
                spec.m_ladder = vec![1, 2];
                spec.replicas = 4000;
            }
            ExperimentName::Density => {
                spec.t = 400.0;
                spec.replicas = 1000;
            }
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::domain("replicas must be at least 1"));
        }
        if !(self.p > 0.5 && self.p <= 1.0) {
            return Err(Error::domain(format!("p must lie in (1/2, 1], got {}", self.p)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::domain(format!("t must be positive, got {}", self.t)));
        }
        if self.m_ladder.is_empty() || self.m_ladder.contains(&0) {
            return Err(Error::domain("M ladder must be nonempty with entries ≥ 1"));
        }
        if self.t_ladder.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::domain("time ladder entries must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::domain("threads must be at least 1"));
        }
        Ok(())
    }

    /// Declared tolerance `key`, or its override.
    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    /// ShockParams for one rung of the M ladder.
    pub fn shock_params(&self, m: usize) -> ShockParams {
        ShockParams {
            p: self.p,
            t: self.t,
            m,
            c: self.c,
            chi: self.chi,
            chi_prime: self.chi_prime,
            delta: self.delta,
            kappa: self.kappa,
            seed: self.seed,
            replicas: self.replicas,
        }
    }
}

/// A reported quantity, with its target and distance where one exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub name: String,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
}

impl Estimate {
    pub fn value(name: impl Into<String>, estimate: f64) -> Self {
        Self {
            name: name.into(),
            estimate,
            std_err: None,
            interval: None,
            target: None,
            distance: None,
        }
    }

    pub fn against(name: impl Into<String>, estimate: f64, target: f64) -> Self {
        Self {
            target: Some(target),
            distance: Some((estimate - target).abs()),
            ..Self::value(name, estimate)
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.std_err = Some(se);
        self
    }

    pub fn with_interval(mut self, (lo, hi): (f64, f64)) -> Self {
        self.interval = Some([lo, hi]);
        self
    }
}

/// A pass/fail decision and the tolerance it used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// "<", "<=", "nonincreasing", …
    pub relation: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<".into(),
            tolerance,
            pass: value < tolerance,
        }
    }

    /// Sequence nonincreasing up to `slack` per step; value is the largest rise.
    pub fn nonincreasing(name: impl Into<String>, seq: &[f64], slack: f64) -> Self {
        let rise = seq.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let rise = if seq.len() < 2 { 0.0 } else { rise };
        Self {
            name: name.into(),
            value: rise,
            relation: "max step increase <=".into(),
            tolerance: slack,
            pass: rise <= slack,
        }
    }

    /// Strictly decreasing sequence; value is the largest step (must be negative).
    pub fn decreasing(name: impl Into<String>, seq: &[f64]) -> Self {
        let rise = seq.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        Self {
            name: name.into(),
            value: rise,
            relation: "max step increase <".into(),
            tolerance: 0.0,
            pass: seq.len() >= 2 && rise < 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub kind: String,
    pub message: String,
}

/// Deterministic summary of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRecord {
    pub schema_version: u32,
    pub experiment: ExperimentName,
    pub params: ExperimentSpec,
    pub estimates: Vec<Estimate>,
    pub checks: Vec<Check>,
    /// Swaps summed over all replicas.
    pub events: u64,
    /// Replicas excluded from the statistics (e.g. 𝒫 or ℋ affected by truncation).
    pub invalid_replicas: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub pass: bool,
}

impl ReportRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub runtime_seconds: f64,
    pub events_per_second: f64,
}

/// What an experiment body produces before timing is attached.
#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub estimates: Vec<Estimate>,
    pub checks: Vec<Check>,
    pub events: u64,
    pub invalid: u64,
    pub csv_header: String,
    pub csv_rows: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub report: ReportRecord,
    pub timing: Timing,
    pub csv_header: String,
    pub csv_rows: Vec<String>,
    /// The error behind a failed report, for exit-status mapping.
    pub error: Option<Error>,
}

impl RunOutput {
    /// Writes `<stem>.json`, `<stem>.csv` and `<stem>.timing.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = self.report.experiment.as_str();
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, self.report.to_json())?;
        let timing = dir.join(format!("{stem}.timing.json"));
        std::fs::write(&timing, serde_json::to_string_pretty(&self.timing).expect("timing serializes") + "\n")?;
        let mut out = vec![json, timing];
        if !self.csv_header.is_empty() {
            let csv = dir.join(format!("{stem}.csv"));
            let mut text = self.csv_header.clone();
            text.push('\n');
            for row in &self.csv_rows {
                text.push_str(row);
                text.push('\n');
            }
            std::fs::write(&csv, text)?;
            out.push(csv);
        }
        Ok(out)
    }
}

fn failure_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::WindowViolation { .. } => "window_violation",
        Error::NonConvergence(_) => "non_convergence",
        Error::Contract(_) => "contract",
        Error::Io(_) => "io",
    }
}

/// Runs `f(replica)` for every replica on the current rayon pool, in replica order.
pub(crate) fn farm<T: Send>(replicas: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..replicas as u64).into_par_iter().map(f).collect()
}

fn in_pool<T: Send>(threads: Option<usize>, body: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::domain(format!("thread pool: {e}")))?
            .install(body),
        None => body(),
    }
}

fn finish(spec: &ExperimentSpec, start: Instant, result: Result<Outcome>) -> RunOutput {
    let runtime = start.elapsed().as_secs_f64();
    let (outcome, error) = match result {
        Ok(o) => (o, None),
        Err(e) => (Outcome::default(), Some(e)),
    };
    let pass = error.is_none() && !outcome.checks.is_empty() && outcome.checks.iter().all(|c| c.pass);
    let report = ReportRecord {
        schema_version: SCHEMA_VERSION,
        experiment: spec.name,
        params: spec.clone(),
        estimates: outcome.estimates,
        checks: outcome.checks,
        events: outcome.events,
        invalid_replicas: outcome.invalid,
        failure: error.as_ref().map(|e| Failure {
            kind: failure_kind(e).into(),
            message: e.to_string(),
        }),
        pass,
    };
    RunOutput {
        timing: Timing {
            runtime_seconds: runtime,
            events_per_second: if runtime > 0.0 { report.events as f64 / runtime } else { 0.0 },
        },
        report,
        csv_header: outcome.csv_header,
        csv_rows: outcome.csv_rows,
        error,
    }
}

fn is_shock(name: ExperimentName) -> bool {
    matches!(
        name,
        ExperimentName::Convp
            | ExperimentName::Indep
            | ExperimentName::Couplthm
            | ExperimentName::Theorem3
            | ExperimentName::Main
    )
}

/// Runs the experiment; errors turn into a failed report carrying the cause.
pub fn run_experiment(spec: &ExperimentSpec) -> RunOutput {
    let start = Instant::now();
    let result = spec.validate().and_then(|_| {
        in_pool(spec.threads, || match spec.name {
            ExperimentName::Twt => step_exps::twt(spec),
            ExperimentName::Slowdec => step_exps::slowdec(spec),
            ExperimentName::Yours => blocking_exps::yours(spec),
            ExperimentName::Stationarity => blocking_exps::stationarity(spec),
            ExperimentName::Tails => blocking_exps::tails(spec),
            ExperimentName::Density => density::density(spec),
            name => shock_exps::run(name, spec),
        })
    });
    finish(spec, start, result)
}

/// Several shock experiments sharing replica farms: a farm is reused whenever
/// two specs agree on every shock parameter for the same M. Each report is
/// identical to the one `run_experiment` would give.
pub fn run_shock_family(specs: &[ExperimentSpec]) -> Vec<RunOutput> {
    let mut cache: Vec<(ShockParams, Vec<crate::shock::ObservableRecord>)> = Vec::new();
    let mut outputs = Vec::with_capacity(specs.len());
    for spec in specs {
        let start = Instant::now();
        let result = spec.validate().and_then(|_| {
            if !is_shock(spec.name) {
                return Err(Error::domain(format!("{} is not a shock experiment", spec.name)));
            }
            let mut farms = Vec::new();
            for &m in &spec.m_ladder {
                let params = spec.shock_params(m);
                let records = match cache.iter().find(|(p, _)| *p == params) {
                    Some((_, r)) => r.clone(),
                    None => {
                        let r = in_pool(spec.threads, || shock_exps::shock_farm(spec, m))?;
                        cache.push((params, r.clone()));
                        r
                    }
                };
                farms.push((m, records));
            }
            shock_exps::outcome(spec.name, spec, &farms)
        });
        outputs.push(finish(spec, start, result));
    }
    outputs
}
