//! Batch sweeps over module entry points, written as CSV plus a JSON manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{
    measure_hardness, verify_consistency, run_game, Adversary, BisectStrategy, BitClass, CenterpointStrategy, FamilySpec,
    HardFamily, MiAdversary, RandomStrategy, Strategy,
};
use crate::halving::{halving_solve, ExactCenterpoint};
use crate::instance::{Instance, InstanceError};
use crate::linalg::solve_square;
use crate::solver::{solve, OracleMode, SolverConfig, StopRule};
use crate::suite::{try_random_instance, GeneratorSpec};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entry {
    Solver,
    Game,
    Halving,
}

fn one() -> usize {
    1
}

fn zero_seed() -> Vec<u64> {
    vec![0]
}

/// A sweep: the cartesian product of the listed axes, each cell run
/// `repetitions` times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub entry: Entry,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub d: Vec<usize>,
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Oracle modes (`solver`), strategy names (`game`), or wrapped algorithms (`halving`).
    #[serde(default)]
    pub modes: Vec<String>,
    #[serde(default = "zero_seed")]
    pub seeds: Vec<u64>,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Fills the `seconds` column; off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub stop: Option<StopRule>,
    /// Instance files replacing the generated `(n, d)` grid for `solver`.
    #[serde(default)]
    pub instances: Vec<PathBuf>,
    /// Family sizes for `halving`.
    #[serde(default)]
    pub sizes: Vec<usize>,
    /// Continuous family for `game`.
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub max_rounds: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions == 0 {
            return Err(ExperimentError::Config("repetitions must be at least 1".into()));
        }
        if let Some(p) = self.instances.iter().find(|p| !p.exists()) {
            return Err(ExperimentError::Config(format!("missing instance file {}", p.display())));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(ExperimentError::Config(format!("eps {e} outside (0, 1)")));
        }
        for m in &self.modes {
            let known = match self.entry {
                Entry::Solver => OracleMode::parse(m).is_some(),
                Entry::Game => matches!(m.as_str(), "bisect" | "random" | "centerpoint"),
                Entry::Halving => m == "exact-centerpoint",
            };
            if !known {
                return Err(ExperimentError::Config(format!("unknown mode `{m}`")));
            }
        }
        Ok(())
    }
}

/// `E = 2^n d (n+d) L₁ ((n+d) L₂ + L₃)` with `L₁ = ln(MR/(min{ρ,1}ε))`,
/// `L₂ = ln((n+d)MR/(ρε))`, `L₃ = ln(2MR/ε)`.
pub fn theorem_expression(n: usize, d: usize, radius: f64, rho: f64, lipschitz: f64, eps: f64) -> f64 {
    let mr = lipschitz * radius;
    let nd = (n + d) as f64;
    let l1 = (mr / (rho.min(1.0) * eps)).ln();
    let l2 = (nd * mr / (rho * eps)).ln();
    let l3 = (2.0 * mr / eps).ln();
    2f64.powi(n as i32) * d as f64 * nd * l1 * (nd * l2 + l3)
}

/// Least squares by the normal equations; `None` when singular.
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let k = x.first()?.len();
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for (row, yi) in x.iter().zip(y) {
        for i in 0..k {
            b[i] += row[i] * yi;
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    solve_square(&a, &b)
}

/// One fitted exponent against the one fitted on the theorem's expression.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub term: String,
    pub fitted: f64,
    pub theoretical: f64,
    pub relative_error: f64,
}

impl ExponentFit {
    pub fn ok(&self) -> bool {
        self.relative_error <= 0.3
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub mode: String,
    pub points: usize,
    /// Geometric mean of `q/E`.
    pub constant: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub exponents: Vec<ExponentFit>,
}

impl ScalingFit {
    pub fn within_factor(&self, f: f64) -> bool {
        self.ratio_min >= 1.0 / f && self.ratio_max <= f
    }

    pub fn ok(&self) -> bool {
        self.within_factor(4.0) && self.exponents.iter().all(ExponentFit::ok)
    }
}

/// `(n, d, eps, queries, expression)`.
pub type FitRow = (usize, usize, f64, f64, f64);

/// Fits `q ≈ C·E` over `(n, d, eps, q, E)` rows and regresses `ln q` and `ln E`
/// on `[1, ln d, n ln 2, ln ln(1/ε)]`, dropping constant regressors.
pub fn fit_scaling(mode: &str, rows: &[FitRow]) -> Option<ScalingFit> {
    if rows.is_empty() {
        return None;
    }
    let logs: Vec<f64> = rows.iter().map(|r| (r.3 / r.4).ln()).collect();
    let constant = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
    let ratios: Vec<f64> = rows.iter().map(|r| r.3 / (constant * r.4)).collect();
    let features: [(&str, fn(&FitRow) -> f64); 3] = [
        ("d", |r| (r.1 as f64).ln()),
        ("2^n", |r| r.0 as f64 * 2f64.ln()),
        ("loglog", |r| (1.0 / r.2).ln().ln()),
    ];
    let used: Vec<usize> = (0..3)
        .filter(|&k| {
            let v: Vec<f64> = rows.iter().map(features[k].1).collect();
            v.iter().any(|x| (x - v[0]).abs() > 1e-12)
        })
        .collect();
    let x: Vec<Vec<f64>> = rows.iter().map(|r| std::iter::once(1.0).chain(used.iter().map(|&k| features[k].1(r))).collect()).collect();
    let bq = least_squares(&x, &rows.iter().map(|r| r.3.ln()).collect::<Vec<_>>())?;
    let be = least_squares(&x, &rows.iter().map(|r| r.4.ln()).collect::<Vec<_>>())?;
    let exponents = used
        .iter()
        .enumerate()
        .filter(|(_, &k)| k < 2)
        .map(|(i, &k)| ExponentFit {
            term: features[k].0.to_string(),
            fitted: bq[i + 1],
            theoretical: be[i + 1],
            relative_error: ((bq[i + 1] - be[i + 1]) / be[i + 1]).abs(),
        })
        .collect();
    Some(ScalingFit {
        mode: mode.to_string(),
        points: rows.len(),
        constant,
        ratio_min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        ratio_max: ratios.iter().copied().fold(0.0, f64::max),
        exponents,
    })
}

/// A sweep's table and fit.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub failed: usize,
    pub fits: Vec<ScalingFit>,
    /// Measured hardness of the continuous family (`game`).
    pub hardness: Option<usize>,
}

impl SweepResult {
    pub fn all_ok(&self) -> bool {
        self.failed == 0
    }

    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn fit_csv(&self) -> Result<String, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["mode", "term", "fitted", "theoretical", "relative_error", "ok"])?;
        for f in &self.fits {
            w.write_record([&f.mode, "C", &fmt(f.constant), "", "", ""])?;
            let ok = f.within_factor(4.0).to_string();
            w.write_record([&f.mode, "ratio_min", &fmt(f.ratio_min), "0.25", "", &ok])?;
            w.write_record([&f.mode, "ratio_max", &fmt(f.ratio_max), "4", "", &ok])?;
            for e in &f.exponents {
                let row = [&f.mode, &e.term, &fmt(e.fitted), &fmt(e.theoretical), &fmt(e.relative_error), &e.ok().to_string()];
                w.write_record(row)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

struct Cell {
    axes: Vec<String>,
    extras: Vec<String>,
    query_total: Option<u64>,
    gap: Option<f64>,
    status: String,
}

fn opt_str<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn header(axes: &[&str], extras: &[&str]) -> Vec<String> {
    axes.iter()
        .chain(extras)
        .chain(["query_total", "gap", "seconds", "status"].iter())
        .map(|s| s.to_string())
        .collect()
}

fn run_cells<J>(config: &ExperimentConfig, header: Vec<String>, jobs: Vec<J>, mut run: impl FnMut(J) -> Cell) -> SweepResult {
    let mut rows = Vec::new();
    let mut failed = 0;
    for job in jobs {
        let t = Instant::now();
        let cell = run(job);
        let secs = t.elapsed().as_secs_f64();
        if cell.status != "ok" {
            failed += 1;
        }
        let mut row = cell.axes;
        row.extend(cell.extras);
        row.push(opt_str(cell.query_total));
        row.push(cell.gap.map(fmt).unwrap_or_default());
        row.push(if config.timing { fmt(secs) } else { String::new() });
        row.push(cell.status);
        rows.push(row);
    }
    SweepResult { header, rows, failed, fits: Vec::new(), hardness: None }
}

fn error_cell(axes: Vec<String>, extras: usize, msg: impl std::fmt::Display) -> Cell {
    Cell { axes, extras: vec![String::new(); extras], query_total: None, gap: None, status: format!("error: {msg}") }
}

fn solver_sweep(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let samples = config.samples.unwrap_or(4000);
    let stop = config.stop.unwrap_or(StopRule::Budget);
    let mut insts: Vec<(Result<Instance, String>, String, usize, usize, u64)> = Vec::new();
    if config.instances.is_empty() {
        for &n in &config.n {
            for &d in &config.d {
                for &s in &config.seeds {
                    let made = try_random_instance(&GeneratorSpec::standard(n, d), s).map_err(|e| e.to_string());
                    insts.push((made, format!("gen-n{n}-d{d}-s{s}"), n, d, s));
                }
            }
        }
    } else {
        for p in &config.instances {
            let inst = Instance::load(p).map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display())))?;
            let (label, n, d) = (inst.label.clone(), inst.params.n, inst.params.d);
            insts.push((Ok(inst), label, n, d, 0));
        }
    }
    let mut jobs = Vec::new();
    for source in &insts {
        for &eps in &config.eps {
            for m in &config.modes {
                let mode = OracleMode::parse(m).expect("validated");
                for rep in 0..config.repetitions {
                    jobs.push((source, mode, eps, rep));
                }
            }
        }
    }
    let head = header(
        &["label", "n", "d", "eps", "mode", "seed", "rep"],
        &["iterations", "budget", "empirical_budget", "empirical_alpha", "theory"],
    );
    let mut fit_rows: Vec<(&'static str, FitRow)> = Vec::new();
    let mut res = run_cells(config, head, jobs, |((made, label, n, d, seed), mode, eps, rep)| {
        let axes = vec![
            label.clone(),
            n.to_string(),
            d.to_string(),
            eps.to_string(),
            mode.name().to_string(),
            seed.to_string(),
            rep.to_string(),
        ];
        let inst = match made {
            Ok(i) => i,
            Err(e) => return error_cell(axes, 5, e),
        };
        let p = inst.params;
        let cfg = SolverConfig::new(eps, mode).with_samples(samples).with_seed(rep as u64).with_stop(stop);
        let theory = theorem_expression(p.n, p.d, p.radius, p.rho, p.lipschitz, eps);
        let opt = match inst.brute_force_opt() {
            Ok(o) => o.value,
            Err(e) => return error_cell(axes, 5, e),
        };
        match solve(inst, &cfg) {
            Ok(r) => {
                let gap = r.value - opt;
                fit_rows.push((mode.name(), (p.n, p.d, eps, r.query_total as f64, theory)));
                Cell {
                    axes,
                    extras: vec![
                        r.iterations.to_string(),
                        r.budget.to_string(),
                        opt_str(r.empirical_budget),
                        r.empirical_alpha.map(fmt).unwrap_or_default(),
                        fmt(theory),
                    ],
                    query_total: Some(r.query_total),
                    gap: Some(gap),
                    status: if gap <= eps + 1e-9 { "ok".into() } else { "violated: gap above eps".into() },
                }
            }
            Err(e) => error_cell(axes, 5, e),
        }
    });
    let mut modes: Vec<&str> = Vec::new();
    for m in &config.modes {
        let name = OracleMode::parse(m).expect("validated").name();
        if !modes.contains(&name) {
            modes.push(name);
        }
    }
    for mode in modes {
        let pts: Vec<_> = fit_rows.iter().filter(|(k, _)| *k == mode).map(|(_, r)| *r).collect();
        if let Some(f) = fit_scaling(mode, &pts) {
            res.fits.push(f);
        }
    }
    Ok(res)
}

fn default_family() -> FamilySpec {
    FamilySpec { d: 1, lipschitz: 1.0, radius: 1.0, eps: 0.05, k: Some(8), members: None }
}

fn make_strategy(name: &str, seed: u64) -> Box<dyn Strategy> {
    match name {
        "bisect" => Box::new(BisectStrategy),
        "random" => Box::new(RandomStrategy { seed }),
        _ => Box::new(CenterpointStrategy { seed, ..CenterpointStrategy::default() }),
    }
}

/// `2^{n−1}·ℓ`.
pub fn transfer_bound(n: usize, hardness: usize) -> usize {
    if n == 0 {
        hardness
    } else {
        (1usize << (n - 1)) * hardness
    }
}

fn game_sweep(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let spec = config.family.clone().unwrap_or_else(default_family);
    let family: HardFamily = spec.build().map_err(|e| ExperimentError::Config(e.to_string()))?;
    let max_rounds = config.max_rounds.unwrap_or(300);
    let mut probes = crate::adversary::bundled_strategies();
    let (ell, _) = measure_hardness(&family, &mut probes, max_rounds).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut jobs = Vec::new();
    for &n in &config.n {
        for m in &config.modes {
            for &seed in &config.seeds {
                for rep in 0..config.repetitions {
                    jobs.push((n, m.clone(), seed, rep));
                }
            }
        }
    }
    let head = header(
        &["n", "d", "eps", "strategy", "seed", "rep"],
        &["hardness", "bound", "stop_round", "unambiguous", "consistent"],
    );
    let eps = family.eps;
    let mut res = run_cells(config, head, jobs, |(n, name, seed, rep)| {
        let axes = vec![n.to_string(), family.d.to_string(), eps.to_string(), name.clone(), seed.to_string(), rep.to_string()];
        let bound = transfer_bound(n, ell);
        let adv = if n == 0 {
            Adversary::Cont(crate::adversary::ContAdversary::new(&family, Some(ell)))
        } else {
            match MiAdversary::new(&family, n, Some(ell), BitClass::Shifted) {
                Ok(a) => Adversary::Mi(a),
                Err(e) => return error_cell(axes, 5, e),
            }
        };
        let mut strat = make_strategy(&name, seed);
        let out = match run_game(strat.as_mut(), adv, eps, max_rounds) {
            Ok(o) => o,
            Err(e) => return error_cell(axes, 5, e),
        };
        let consistent = verify_consistency(&out, &family, 100, seed ^ rep as u64);
        let status = match (&consistent, out.stop_round >= bound) {
            (Ok(_), true) => "ok".to_string(),
            (Err(e), _) => format!("violated: {e}"),
            (Ok(_), false) => "violated: stopped before the bound".to_string(),
        };
        Cell {
            axes,
            extras: vec![
                ell.to_string(),
                bound.to_string(),
                out.stop_round.to_string(),
                out.unambiguous.to_string(),
                consistent.is_ok().to_string(),
            ],
            query_total: Some(out.stop_round as u64),
            gap: None,
            status,
        }
    });
    res.hardness = Some(ell);
    Ok(res)
}

/// A family of `size` generated instances of shape `(n, d)` and a hidden index.
pub fn halving_family(n: usize, d: usize, size: usize, seed: u64) -> Result<(Vec<Instance>, usize), InstanceError> {
    if size == 0 {
        return Err(InstanceError::ClassViolation("family size must be positive".into()));
    }
    let spec = GeneratorSpec::standard(n, d);
    let family = (0..size as u64)
        .map(|k| try_random_instance(&spec, seed.wrapping_mul(1_000_003).wrapping_add(k)))
        .collect::<Result<Vec<_>, _>>()?;
    let truth = ChaCha8Rng::seed_from_u64(seed).gen_range(0..size);
    Ok((family, truth))
}

fn halving_sweep(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    let samples = config.samples.unwrap_or(2000);
    let mut jobs = Vec::new();
    for &size in &config.sizes {
        for &n in &config.n {
            for &d in &config.d {
                for &eps in &config.eps {
                    for &seed in &config.seeds {
                        for rep in 0..config.repetitions {
                            jobs.push((size, n, d, eps, seed, rep));
                        }
                    }
                }
            }
        }
    }
    let head = header(
        &["size", "n", "d", "eps", "seed", "rep"],
        &["truth", "budget", "bound", "identified", "rounds"],
    );
    Ok(run_cells(config, head, jobs, |(size, n, d, eps, seed, rep)| {
        let axes = vec![size.to_string(), n.to_string(), d.to_string(), eps.to_string(), seed.to_string(), rep.to_string()];
        let (family, truth) = match halving_family(n, d, size, seed) {
            Ok(f) => f,
            Err(e) => return error_cell(axes, 5, e),
        };
        let mut wrapped = match ExactCenterpoint::new(&family[truth], eps, samples, rep as u64) {
            Ok(w) => w,
            Err(e) => return error_cell(axes, 5, e),
        };
        match halving_solve(&family, truth, &mut wrapped, eps) {
            Ok(r) => {
                let within = (r.binary_queries as f64) <= r.query_bound && r.gap <= eps + 1e-9;
                Cell {
                    axes,
                    extras: vec![
                        truth.to_string(),
                        r.budget.to_string(),
                        fmt(r.query_bound),
                        r.identified.to_string(),
                        r.rounds.to_string(),
                    ],
                    query_total: Some(r.binary_queries),
                    gap: Some(r.gap),
                    status: if within { "ok".into() } else { "violated: bound or gap".into() },
                }
            }
            Err(e) => error_cell(axes, 5, e),
        }
    }))
}

/// Runs every cell of the sweep in declared order.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    config.validate()?;
    match config.entry {
        Entry::Solver => solver_sweep(config),
        Entry::Game => game_sweep(config),
        Entry::Halving => halving_sweep(config),
    }
}

/// `git describe`-style version: the repository's own description when
/// available, otherwise `v<crate version>`.
pub fn describe_version() -> String {
    std::process::Command::new("git")
        .args(["describe", "--tags", "--always", "--dirty"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .map(|s| format!("v{}-{s}", env!("CARGO_PKG_VERSION")))
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub entry: Entry,
    pub cells: usize,
    pub failed: usize,
    pub results: String,
    pub fit: Option<String>,
    pub hardness: Option<usize>,
    pub fits: Vec<ScalingFit>,
    pub config: ExperimentConfig,
}

/// Writes `results.csv`, `manifest.json` and (for solver sweeps) `fit.csv` into `out`.
pub fn write_outputs(config: &ExperimentConfig, res: &SweepResult, out: &Path) -> Result<Manifest, ExperimentError> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("results.csv"), res.to_csv()?)?;
    let fit = if config.entry == Entry::Solver {
        std::fs::write(out.join("fit.csv"), res.fit_csv()?)?;
        Some("fit.csv".to_string())
    } else {
        None
    };
    let manifest = Manifest {
        version: describe_version(),
        entry: config.entry,
        cells: res.rows.len(),
        failed: res.failed,
        results: "results.csv".into(),
        fit,
        hardness: res.hardness,
        fits: res.fits.clone(),
        config: config.clone(),
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let c = cfg(r#"{"entry": "solver"}"#);
        let r = run_sweep(&c).unwrap();
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("label,n,d,eps,mode,seed,rep,"));
        assert!(csv.trim_end().ends_with("query_total,gap,seconds,status"));
    }

    #[test]
    fn zero_repetitions_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"entry": "game", "repetitions": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"entry": "solver", "instances": ["/nonexistent.json"]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"entry": "solver", "modes": ["fast"]}"#).is_err());
    }

    #[test]
    fn least_squares_recovers_plane() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64, (i * i) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 - r[1] + 0.5 * r[2]).collect();
        let b = least_squares(&x, &y).unwrap();
        for (got, want) in b.iter().zip([2.0, -1.0, 0.5]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_of_the_expression_itself_is_exact() {
        let mut rows = Vec::new();
        for n in 0..3 {
            for d in 1..4 {
                for eps in [0.2, 0.05] {
                    let e = theorem_expression(n, d, 1.0, 0.5, 1.0, eps);
                    rows.push((n, d, eps, 3.0 * e, e));
                }
            }
        }
        let f = fit_scaling("dir", &rows).unwrap();
        assert!((f.constant - 3.0).abs() < 1e-9);
        assert!(f.ok());
        assert!(f.exponents.iter().all(|e| e.relative_error < 1e-9));
    }

    #[test]
    fn solver_sweep_is_deterministic() {
        let c = cfg(r#"{"entry": "solver", "n": [0], "d": [1, 2], "eps": [0.2], "modes": ["exact"], "samples": 1000}"#);
        let a = run_sweep(&c).unwrap();
        let b = run_sweep(&c).unwrap();
        assert!(a.all_ok());
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.rows.len(), 2);
    }

    #[test]
    fn halving_sweep_rows() {
        let c = cfg(r#"{"entry": "halving", "sizes": [8], "n": [0], "d": [2], "eps": [0.05], "seeds": [1, 2]}"#);
        let r = run_sweep(&c).unwrap();
        assert!(r.all_ok(), "{:?}", r.rows);
        assert_eq!(r.rows.len(), 2);
    }

    #[test]
    fn game_sweep_meets_transfer_bound() {
        let c = cfg(r#"{"entry": "game", "n": [0, 1], "modes": ["bisect", "random"], "seeds": [3]}"#);
        let r = run_sweep(&c).unwrap();
        assert!(r.all_ok(), "{:?}", r.rows);
        assert_eq!(r.rows.len(), 4);
        assert!(r.hardness.unwrap() >= 1);
    }
}
