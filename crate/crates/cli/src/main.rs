//! Command-line front end: simulations, named experiments and law tables.
//!
//! Exit status: 0 pass, 1 tolerance failure, 2 usage error,
//! 3 numerical non-convergence, 4 window violation.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shockasep::blocking::{BlockingMeasure, BlockingParams};
use shockasep::experiments::{density_oracle, mean_density, run_experiment, ExperimentName, ExperimentSpec};
use shockasep::lattice::{kmc_evolve, snapshot_line, ArrowStream};
use shockasep::numerics::brownian::f_m1_mc;
use shockasep::numerics::laws::{DiffLaw, DiffMode, PmfTable};
use shockasep::numerics::tracy_widom::{
    f_gue, f_mp_contour, f_mp_residue, ContourSpec, DEFAULT_GAUSS_ORDER,
};
use shockasep::rng::replica_seed;
use shockasep::shock::{build_shock_ic, run_shock_replica, ShockParams, CSV_HEADER};
use shockasep::{Error, Result};

#[derive(Parser)]
#[command(name = "shockasep", version, about = "Second-class particle at a hard ASEP shock")]
struct Cli {
    /// Master seed; replica r uses a 64-bit mix of (seed, r).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replica farms (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: standard output where applicable).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// File of `key = value` lines; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Shock runs, one CSV row per replica.
    ///
    /// With --dump FILE, replica 0 is also recorded every --every time
    /// units as lines `time<TAB>rle`, where rle is the window occupancy as
    /// `<count><symbol>` runs with symbols H (hole), F (particle) and
    /// S (second-class particle), leftmost site first.
    Simulate(SimArgs),
    /// A named experiment; writes <name>.json, <name>.csv and
    /// <name>.timing.json and prints the JSON summary.
    Experiment(ExpArgs),
    /// Tables of the limit laws as CSV.
    Dist {
        #[command(subcommand)]
        family: Dist,
    },
    /// Averaged density profile of the shock run at time t.
    Density(DensityArgs),
}

#[derive(Args)]
struct ShockFlags {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long = "M")]
    m: Option<usize>,
    /// Override the shift constant C (default C(M)).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    replicas: Option<usize>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    shock: ShockFlags,
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Time between dumped snapshots.
    #[arg(long, default_value_t = 1.0)]
    every: f64,
}

#[derive(Args)]
struct ExpArgs {
    name: ExperimentName,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Comma-separated ladder of times (overrides the default ladder).
    #[arg(long = "t-ladder", value_delimiter = ',')]
    t_ladder: Option<Vec<f64>>,
    /// M, or a comma-separated ladder of M (L for slowdec).
    #[arg(long = "M", value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<f64>>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    chiprime: Option<f64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long = "Z", allow_hyphen_values = true)]
    z: Option<i64>,
    /// Tolerance override `key=value`; repeatable.
    #[arg(long = "tol")]
    tol: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Contour,
    Residue,
}

#[derive(Subcommand)]
enum Dist {
    /// F_GUE(s).
    Fgue {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        s: Vec<f64>,
    },
    /// F_(M,p)(s).
    Fmp {
        #[arg(long = "M")]
        m: usize,
        #[arg(long, default_value_t = 0.7)]
        p: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        s: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Method::Contour)]
        method: Method,
    },
    /// Monte Carlo F_(M,1)(s) from Brownian last passage percolation.
    Fm1 {
        #[arg(long = "M")]
        m: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        s: Vec<f64>,
        /// Grid steps per unit time (a power of two).
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 10_000)]
        replicas: usize,
    },
    /// pmf of 𝒫 (and ℋ) at C(M).
    #[command(name = "pmfP")]
    PmfP {
        #[arg(long = "M")]
        m: usize,
        #[arg(long, default_value_t = 0.7)]
        p: f64,
        #[arg(long = "Lmax", default_value_t = 12)]
        l_max: usize,
    },
    /// CDF of the difference law, finite M or the GUE limit.
    Diff {
        #[arg(long = "M", required_unless_present = "limit")]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.7)]
        p: f64,
        #[arg(long, conflicts_with = "m")]
        limit: bool,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        s: Option<Vec<f64>>,
    },
    /// pmf of V₀ on [-range, range].
    V0 {
        #[arg(long, default_value_t = 0.7)]
        p: f64,
        #[arg(long, default_value_t = 8)]
        range: i64,
    },
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    shock: ShockFlags,
    /// Sites per output bin.
    #[arg(long, default_value_t = 10)]
    bin: usize,
}

/// `key = value` settings from --config.
#[derive(Default)]
struct Config(BTreeMap<String, String>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path)?;
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::domain(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.0
            .get(key)
            .map(|v| v.parse().map_err(|_| Error::domain(format!("config: bad value {v:?} for {key}"))))
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.0
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| x.trim().parse().map_err(|_| Error::domain(format!("config: bad entry {x:?} in {key}"))))
                    .collect()
            })
            .transpose()
    }

    /// Command-line value if given, else the config value.
    fn pick<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>> {
        match cli {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

struct Globals {
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
}

fn shock_params(flags: &ShockFlags, g: &Globals, cfg: &Config) -> Result<ShockParams> {
    let d = ShockParams::default();
    let params = ShockParams {
        p: cfg.pick(flags.p, "p")?.unwrap_or(d.p),
        t: cfg.pick(flags.t, "t")?.unwrap_or(d.t),
        m: cfg.pick(flags.m, "M")?.unwrap_or(d.m),
        c: cfg.pick(flags.c, "c")?,
        chi: cfg.get("chi")?.unwrap_or(d.chi),
        chi_prime: cfg.get("chiprime")?.unwrap_or(d.chi_prime),
        seed: g.seed.unwrap_or(d.seed),
        replicas: cfg.pick(flags.replicas, "replicas")?.unwrap_or(d.replicas),
        ..d
    };
    params.validate()?;
    Ok(params)
}

/// Writes `text` to `<out>/<file>` or to standard output.
fn emit(g: &Globals, file: &str, text: &str) -> Result<()> {
    match &g.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(file), text)?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pool(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon_pool(n)?;
    }
    Ok(())
}

fn rayon_pool(n: usize) -> Result<()> {
    // the global pool can be configured once per process
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::domain(format!("thread pool: {e}")))
}

fn simulate(args: &SimArgs, g: &Globals, cfg: &Config) -> Result<i32> {
    use rayon::prelude::*;
    let params = shock_params(&args.shock, g, cfg)?;
    let records: Vec<_> = (0..params.replicas as u64)
        .into_par_iter()
        .map(|r| run_shock_replica(&params, r))
        .collect::<Result<_>>()?;
    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for r in &records {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    emit(g, "simulate.csv", &text)?;
    if let Some(path) = &args.dump {
        if !(args.every > 0.0) {
            return Err(Error::domain("--every must be positive"));
        }
        let (ic, _) = build_shock_ic(&params)?;
        let n = (params.t / args.every).floor() as usize;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * args.every).collect();
        let stream = ArrowStream::new(replica_seed(params.seed, 0), params.p)?;
        let traj = kmc_evolve(ic, &stream, params.t, &times)?;
        let lines: Vec<String> = traj.snapshots.iter().map(|(s, c)| snapshot_line(*s, c)).collect();
        fs::write(path, lines.join("\n") + "\n")?;
        traj.check()?;
    }
    Ok(0)
}

fn experiment(args: &ExpArgs, g: &Globals, cfg: &Config) -> Result<i32> {
    let mut spec = ExperimentSpec::defaults(args.name);
    if let Some(p) = cfg.pick(args.p, "p")? {
        spec.p = p;
    }
    let t_ladder = match &args.t_ladder {
        Some(l) => Some(l.clone()),
        None => cfg.list("t_ladder")?,
    };
    let t = cfg.pick(args.t, "t")?;
    match (t_ladder, t) {
        (Some(l), _) => {
            spec.t = l.iter().copied().fold(f64::MIN, f64::max);
            spec.t_ladder = l;
        }
        // a single t replaces the ladder
        (None, Some(t)) => {
            spec.t = t;
            if !spec.t_ladder.is_empty() {
                spec.t_ladder = vec![t];
            }
        }
        (None, None) => {}
    }
    if let Some(m) = match &args.m {
        Some(m) => Some(m.clone()),
        None => cfg.list("M")?,
    } {
        spec.m_ladder = m;
    }
    if let Some(s) = match &args.s {
        Some(s) => Some(s.clone()),
        None => cfg.list("s")?,
    } {
        spec.s_values = s;
    }
    spec.c = cfg.pick(args.c, "c")?.or(spec.c);
    if let Some(v) = cfg.pick(args.chi, "chi")? {
        spec.chi = v;
    }
    if let Some(v) = cfg.pick(args.chiprime, "chiprime")? {
        spec.chi_prime = v;
    }
    if let Some(v) = cfg.pick(args.replicas, "replicas")? {
        spec.replicas = v;
    }
    if let Some(v) = cfg.pick(args.z, "Z")? {
        spec.z = v;
    }
    if let Some(v) = g.seed {
        spec.seed = v;
    } else if let Some(v) = cfg.get("seed")? {
        spec.seed = v;
    }
    spec.threads = g.threads;
    for (k, v) in &cfg.0 {
        if let Some(key) = k.strip_prefix("tol.") {
            let x = v.parse().map_err(|_| Error::domain(format!("config: bad tolerance {v:?} for {key}")))?;
            spec.tolerances.insert(key.to_string(), x);
        }
    }
    for item in &args.tol {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::domain(format!("--tol expects key=value, got {item:?}")))?;
        let x = v.trim().parse().map_err(|_| Error::domain(format!("bad tolerance {v:?} for {k}")))?;
        spec.tolerances.insert(k.trim().to_string(), x);
    }
    let out = run_experiment(&spec);
    out.write(g.out.as_deref().unwrap_or(Path::new(".")))?;
    print!("{}", out.report.to_json());
    eprintln!(
        "{}: {} in {:.1}s, {:.3e} events/s",
        spec.name,
        if out.report.pass { "pass" } else { "FAIL" },
        out.timing.runtime_seconds,
        out.timing.events_per_second
    );
    for c in out.report.checks.iter().filter(|c| !c.pass) {
        eprintln!("  failed {}: {} {} {}", c.name, c.value, c.relation, c.tolerance);
    }
    match out.error {
        Some(e) => Err(e),
        None => Ok(if out.report.pass { 0 } else { 1 }),
    }
}

const DIFF_GRID: (i32, i32, f64) = (-16, 16, 0.25);

fn dist(family: &Dist, g: &Globals) -> Result<i32> {
    let mut text = String::new();
    let name = match family {
        Dist::Fgue { s } => {
            text.push_str("s,F_GUE\n");
            for &x in s {
                text.push_str(&format!("{x},{}\n", f_gue(x)?));
            }
            "fgue"
        }
        Dist::Fmp { m, p, s, method } => {
            text.push_str("M,p,s,F\n");
            for &x in s {
                let v = match method {
                    Method::Contour => f_mp_contour(*m, *p, x, &ContourSpec::default_for(*m, *p), DEFAULT_GAUSS_ORDER)?,
                    Method::Residue => f_mp_residue(*m, *p, x, DEFAULT_GAUSS_ORDER)?,
                };
                text.push_str(&format!("{m},{p},{x},{v}\n"));
            }
            "fmp"
        }
        Dist::Fm1 { m, s, grid, replicas } => {
            text.push_str("M,s,F,std_err\n");
            for &x in s {
                let e = f_m1_mc(*m, x, *grid, *replicas, g.seed.unwrap_or(1))?;
                text.push_str(&format!("{m},{x},{},{}\n", e.value, e.std_err));
            }
            "fm1"
        }
        Dist::PmfP { m, p, l_max } => {
            let table = PmfTable::with_l_max(*m, *p, *l_max)?;
            text.push_str("L,pmf\n");
            for l in 0..=*l_max {
                text.push_str(&format!("{l},{}\n", table.pmf(l)));
            }
            "pmfP"
        }
        Dist::Diff { m, p, limit, s } => {
            let mode = if *limit {
                DiffMode::Limit
            } else {
                DiffMode::Finite { m: m.expect("clap requires M without --limit"), p: *p }
            };
            let law = DiffLaw::new(mode)?;
            let grid = s.clone().unwrap_or_else(|| {
                let (a, b, h) = DIFF_GRID;
                (a..=b).map(|k| k as f64 * h).collect()
            });
            text.push_str("s,cdf\n");
            for x in grid {
                text.push_str(&format!("{x},{}\n", law.cdf(x)));
            }
            "diff"
        }
        Dist::V0 { p, range } => {
            let measure = BlockingMeasure::new(BlockingParams::new(*p)?);
            text.push_str("i,pmf\n");
            for i in -range..=*range {
                text.push_str(&format!("{i},{}\n", measure.v0_pmf(i)));
            }
            "v0"
        }
    };
    emit(g, &format!("dist_{name}.csv"), &text)?;
    Ok(0)
}

fn density(args: &DensityArgs, g: &Globals, cfg: &Config) -> Result<i32> {
    if args.bin == 0 {
        return Err(Error::domain("--bin must be at least 1"));
    }
    let mut params = shock_params(&args.shock, g, cfg)?;
    if args.shock.replicas.is_none() && cfg.get::<usize>("replicas")?.is_none() {
        params.replicas = 200;
    }
    let b = params.block()?;
    let (lo, mean, _) = mean_density(&params, params.replicas)?;
    let mut text = String::from("x,xi,density,oracle\n");
    for (k, chunk) in mean.chunks_exact(args.bin).enumerate() {
        let start = lo + (k * args.bin) as i64;
        let centre = start as f64 + (args.bin as f64 - 1.0) / 2.0;
        let d = chunk.iter().sum::<f64>() / args.bin as f64;
        let oracle = (0..args.bin)
            .map(|j| density_oracle((start + j as i64) as f64, params.t, params.p, b))
            .sum::<f64>()
            / args.bin as f64;
        text.push_str(&format!("{centre},{},{d},{oracle}\n", centre / params.t));
    }
    emit(g, "density.csv", &text)?;
    Ok(0)
}

fn run(cli: &Cli) -> Result<i32> {
    let cfg = Config::load(cli.config.as_deref())?;
    let g = Globals {
        seed: cfg.pick(cli.seed, "seed")?,
        threads: cfg.pick(cli.threads, "threads")?,
        out: cfg.pick(cli.out.clone(), "out")?,
    };
    if let Some(0) = g.threads {
        return Err(Error::domain("--threads must be at least 1"));
    }
    match &cli.cmd {
        // experiments build their own pool so reports do not depend on it
        Cmd::Experiment(a) => experiment(a, &g, &cfg),
        Cmd::Simulate(a) => {
            pool(g.threads)?;
            simulate(a, &g, &cfg)
        }
        Cmd::Dist { family } => dist(family, &g),
        Cmd::Density(a) => {
            pool(g.threads)?;
            density(a, &g, &cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
