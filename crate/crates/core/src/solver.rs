//! Centerpoint cutting-plane method for mixed-integer convex minimisation under
//! full, bit, or direction-sign oracles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centerpoint::{approx_centerpoint, VersionPolytope};
use crate::instance::{ClassParams, Instance, InstanceError, MixedPoint};
use crate::oracle::{InstanceOracle, Oracle, OracleError, Query, QueryCounter, Response, Session, Target, Transcript};
use crate::recovery::{
    approx_value_estimate, make_approx_separation, make_approx_value_cut, ApproxMode, RecoveryError,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no feasible point was found")]
    NoFeasibleFound,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Oracle access used by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Exact,
    Bit,
    Dir,
}

impl OracleMode {
    pub fn approx(self) -> Option<ApproxMode> {
        match self {
            OracleMode::Exact => None,
            OracleMode::Bit => Some(ApproxMode::Bit),
            OracleMode::Dir => Some(ApproxMode::Dir),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(OracleMode::Exact),
            "bit" => Some(OracleMode::Bit),
            "dir" => Some(OracleMode::Dir),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OracleMode::Exact => "exact",
            OracleMode::Bit => "bit",
            OracleMode::Dir => "dir",
        }
    }
}

/// When the main loop ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    /// Run the worst-case budget `T`.
    Budget,
    /// Stop at `min(T, T_emp)`, where `T_emp` substitutes the smallest retained
    /// fraction measured so far for the worst-case centerpoint constant.
    Empirical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub samples: usize,
    pub seed: u64,
    pub mode: OracleMode,
    pub stop: StopRule,
    /// Overrides the computed budget `T` when set.
    pub max_iterations: Option<usize>,
}

impl SolverConfig {
    pub fn new(eps: f64, mode: OracleMode) -> Self {
        Self { eps, samples: 10_000, seed: 0, mode, stop: StopRule::Empirical, max_iterations: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    /// `ε' = ε/6`.
    pub fn eps_prime(&self) -> f64 {
        self.eps / 6.0
    }

    /// `ρ' = ε'ρ/(4MR)`.
    pub fn rho_prime(&self, p: &ClassParams) -> f64 {
        self.eps_prime() * p.rho / (4.0 * p.lipschitz * p.radius)
    }

    fn validate(&self, p: &ClassParams) -> Result<(), SolverError> {
        if !(self.eps > 0.0) {
            return Err(SolverError::InvalidConfig("eps must be positive".into()));
        }
        if p.d == 0 {
            return Err(SolverError::InvalidConfig("at least one continuous coordinate is required".into()));
        }
        if !(p.rho > 0.0 && p.lipschitz > 0.0 && p.radius > 0.0) {
            return Err(SolverError::InvalidConfig("R, rho and M must be positive".into()));
        }
        if self.max_iterations == Some(0) {
            return Err(SolverError::InvalidConfig("iteration cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// `ln(2R / min{ρ', 1})`.
fn log_term(p: &ClassParams, rho_prime: f64) -> f64 {
    (2.0 * p.radius / rho_prime.min(1.0)).ln()
}

/// The worst-case iteration budget `T = ⌈2^n (n+d)(d+1) ln(2R/min{ρ',1})⌉`; for
/// `n = 0` the continuous rate `1/e` gives `⌈e·d·ln(2R/min{ρ',1})⌉`.
pub fn iteration_budget(p: &ClassParams, rho_prime: f64) -> usize {
    let l = log_term(p, rho_prime);
    let t = if p.n == 0 {
        std::f64::consts::E * p.d as f64 * l
    } else {
        2f64.powi(p.n as i32) * p.dim() as f64 * (p.d as f64 + 1.0) * l
    };
    (t.ceil() as usize).max(1)
}

/// The same budget with `alpha` substituted for the centerpoint constant.
pub fn empirical_budget(p: &ClassParams, rho_prime: f64, alpha: f64) -> usize {
    ((p.dim() as f64 * log_term(p, rho_prime) / alpha).ceil() as usize).max(1)
}

/// What one oracle round revealed about a centerpoint.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Infeasible { normal: Vec<f64> },
    Feasible { value: Option<f64>, cut: Vec<f64> },
}

/// Ask/tell state of the centerpoint method.
#[derive(Debug, Clone)]
pub struct CenterpointRun {
    pub params: ClassParams,
    pub config: SolverConfig,
    pub version: VersionPolytope,
    pub feasible: Vec<(Vec<f64>, Option<f64>)>,
    pub iterations: usize,
    pub budget: usize,
    pub alpha: Option<f64>,
    pub collapsed_at: Option<usize>,
    pub exhausted: bool,
    pending: Option<(Vec<f64>, bool)>,
}

impl CenterpointRun {
    pub fn new(params: ClassParams, config: SolverConfig) -> Result<Self, SolverError> {
        config.validate(&params)?;
        let budget = config.max_iterations.unwrap_or_else(|| iteration_budget(&params, config.rho_prime(&params)));
        let version = VersionPolytope::new(params.n, params.d, params.radius)?;
        Ok(Self {
            params,
            config,
            version,
            feasible: Vec::new(),
            iterations: 0,
            budget,
            alpha: None,
            collapsed_at: None,
            exhausted: false,
            pending: None,
        })
    }

    pub fn rho_prime(&self) -> f64 {
        self.config.rho_prime(&self.params)
    }

    /// `T_emp` for the smallest retained fraction seen so far.
    pub fn empirical_budget(&self) -> Option<usize> {
        self.alpha.filter(|a| *a > 0.0).map(|a| empirical_budget(&self.params, self.rho_prime(), a))
    }

    fn done(&self) -> bool {
        if self.exhausted || self.iterations >= self.budget {
            return true;
        }
        self.config.stop == StopRule::Empirical && self.empirical_budget().is_some_and(|t| self.iterations >= t)
    }

    /// The next point to query, or `None` once the loop has ended.
    pub fn next_point(&mut self) -> Option<Vec<f64>> {
        if let Some((z, _)) = &self.pending {
            return Some(z.clone());
        }
        if self.done() {
            return None;
        }
        let seed = self.config.seed ^ (self.iterations as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let pass = match approx_centerpoint(&self.version, self.config.samples, seed) {
            Ok(p) => p,
            Err(_) => {
                self.exhausted = true;
                return None;
            }
        };
        self.version.retain_fibers(&pass.nonempty);
        let est = pass.estimate;
        if let Some(a) = est.retained {
            self.alpha = Some(self.alpha.map_or(a, |b: f64| b.min(a)));
        }
        if est.collapsed && self.collapsed_at.is_none() {
            self.collapsed_at = Some(self.iterations);
        }
        self.pending = Some((est.point.clone(), est.collapsed));
        Some(est.point)
    }

    /// Records the oracle's answer at the pending point and applies the cut.
    pub fn observe(&mut self, obs: Observation) {
        let Some((z, collapsed)) = self.pending.take() else {
            return;
        };
        self.iterations += 1;
        let normal = match obs {
            Observation::Infeasible { normal } => normal,
            Observation::Feasible { value, cut } => {
                self.feasible.push((z.clone(), value));
                cut
            }
        };
        if !collapsed {
            self.version.cut_through(&normal, &z);
        }
    }
}

/// Summary of a solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    pub solution: MixedPoint,
    /// True objective value of the solution when the instance is known, otherwise
    /// the oracle-based estimate.
    pub value: f64,
    pub value_estimate: f64,
    pub iterations: usize,
    pub budget: usize,
    pub empirical_budget: Option<usize>,
    pub empirical_alpha: Option<f64>,
    pub theoretical_alpha: f64,
    pub collapsed_at: Option<usize>,
    pub query_total: u64,
    pub per_kind: QueryCounter,
    pub feasible_pool_size: usize,
    pub eps: f64,
    pub mode: OracleMode,
}

fn expect_vector(r: Response, dim: usize) -> Result<Vec<f64>, OracleError> {
    match r {
        Response::Vector(v) => Ok(v),
        Response::Scalar(s) if dim == 1 => Ok(vec![s]),
        other => Err(OracleError::Internal(format!("expected a vector, got {other:?}"))),
    }
}

fn expect_scalar(r: Response) -> Result<f64, OracleError> {
    r.as_scalar().ok_or_else(|| OracleError::Internal(format!("expected a value, got {r:?}")))
}

/// Queries the oracle at `z` in the configured mode.
pub fn observe_point(
    oracle: &mut dyn Oracle,
    params: &ClassParams,
    config: &SolverConfig,
    z: &[f64],
) -> Result<Observation, SolverError> {
    let dim = params.dim();
    match config.mode.approx() {
        None => {
            let sep = expect_vector(oracle.answer(&Query::full(z.to_vec(), Target::Sep))?, dim)?;
            if sep.iter().any(|v| *v != 0.0) {
                return Ok(Observation::Infeasible { normal: sep });
            }
            let value = expect_scalar(oracle.answer(&Query::full(z.to_vec(), Target::Val))?)?;
            let cut = expect_vector(oracle.answer(&Query::full(z.to_vec(), Target::Sub))?, dim)?;
            Ok(Observation::Feasible { value: Some(value), cut })
        }
        Some(mode) => {
            let rho_prime = config.rho_prime(params);
            let sep = make_approx_separation(oracle, params, z, rho_prime, mode)?;
            if sep.iter().any(|v| *v != 0.0) {
                return Ok(Observation::Infeasible { normal: sep });
            }
            let cut = make_approx_value_cut(oracle, params, z, config.eps_prime(), mode)?;
            Ok(Observation::Feasible { value: None, cut })
        }
    }
}

/// Picks the best recorded feasible point: exact values when known, otherwise one
/// `ε'/2`-accurate estimate per point.
pub fn select_best(
    oracle: &mut dyn Oracle,
    run: &CenterpointRun,
    value_bound: f64,
) -> Result<(Vec<f64>, f64), SolverError> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (z, v) in &run.feasible {
        let est = match (v, run.config.mode.approx()) {
            (Some(v), _) => *v,
            (None, Some(mode)) => approx_value_estimate(oracle, z, value_bound, run.config.eps_prime() / 2.0, mode)?,
            (None, None) => expect_scalar(oracle.answer(&Query::full(z.clone(), Target::Val))?)?,
        };
        if best.as_ref().is_none_or(|b| est < b.1) {
            best = Some((z.clone(), est));
        }
    }
    best.ok_or(SolverError::NoFeasibleFound)
}

/// Runs the method against an arbitrary oracle; `value_bound` bounds `|f|` on the box.
pub fn solve_with_oracle(
    oracle: &mut dyn Oracle,
    params: ClassParams,
    config: SolverConfig,
    value_bound: f64,
) -> Result<(CenterpointRun, Vec<f64>, f64), SolverError> {
    let mut run = CenterpointRun::new(params, config)?;
    while let Some(z) = run.next_point() {
        let obs = observe_point(oracle, &run.params, &run.config, &z)?;
        run.observe(obs);
    }
    let (z, v) = select_best(oracle, &run, value_bound)?;
    Ok((run, z, v))
}

/// Solves `inst` through its exact charts post-processed by `config.mode`.
pub fn solve(inst: &Instance, config: &SolverConfig) -> Result<SolverReport, SolverError> {
    if config.mode != OracleMode::Exact {
        inst.check_gradient_bound()?;
    }
    let mut session = Session::new(InstanceOracle::new(inst));
    let (run, z, est) = solve_with_oracle(&mut session, inst.params, config.clone(), inst.value_bound())?;
    Ok(report(&run, &z, inst.eval(&z), est, session.counter))
}

/// [`solve`] that also returns the full query transcript.
pub fn solve_recorded(inst: &Instance, config: &SolverConfig) -> Result<(SolverReport, Transcript), SolverError> {
    if config.mode != OracleMode::Exact {
        inst.check_gradient_bound()?;
    }
    let mut session = Session::recording(InstanceOracle::new(inst));
    let (run, z, est) = solve_with_oracle(&mut session, inst.params, config.clone(), inst.value_bound())?;
    let transcript = session.transcript.take().unwrap_or_default();
    Ok((report(&run, &z, inst.eval(&z), est, session.counter), transcript))
}

pub fn report(run: &CenterpointRun, z: &[f64], value: f64, estimate: f64, counter: QueryCounter) -> SolverReport {
    let p = &run.params;
    SolverReport {
        solution: MixedPoint::from_dense(z, p.n),
        value,
        value_estimate: estimate,
        iterations: run.iterations,
        budget: run.budget,
        empirical_budget: run.empirical_budget(),
        empirical_alpha: run.alpha,
        theoretical_alpha: if p.n == 0 {
            (-1.0f64).exp()
        } else {
            1.0 / (2f64.powi(p.n as i32) * (p.d as f64 + 1.0))
        },
        collapsed_at: run.collapsed_at,
        query_total: counter.total,
        per_kind: counter,
        feasible_pool_size: run.feasible.len(),
        eps: run.config.eps,
        mode: run.config.mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::MaxAffineFunction;

    #[test]
    fn budget_examples() {
        let p = ClassParams { n: 0, d: 1, radius: 1.0, rho: 1.0, lipschitz: 1.0 };
        assert_eq!(iteration_budget(&p, 1.0), 2);
        let p = ClassParams { n: 1, d: 1, radius: 1.0, rho: 1.0, lipschitz: 1.0 };
        assert_eq!(iteration_budget(&p, 0.5), 12);
    }

    fn abs1() -> Instance {
        let f = MaxAffineFunction::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let p = ClassParams { n: 0, d: 1, radius: 1.0, rho: 0.5, lipschitz: 1.0 };
        Instance::unconstrained(f, p, "abs").unwrap()
    }

    #[test]
    fn abs_in_all_modes() {
        let inst = abs1();
        for mode in [OracleMode::Exact, OracleMode::Bit, OracleMode::Dir] {
            let r = solve(&inst, &SolverConfig::new(0.1, mode).with_samples(2_000)).unwrap();
            assert!(r.value <= 0.1, "{mode:?}: {}", r.value);
            assert!(r.iterations <= r.budget);
        }
    }

    #[test]
    fn mixed_abs_plus_x() {
        let f = MaxAffineFunction::from_rows(&[vec![1.0, 1.0, 0.0], vec![1.0, -1.0, 0.0]]).unwrap();
        let p = ClassParams { n: 1, d: 1, radius: 1.0, rho: 0.5, lipschitz: 1.0 };
        let inst = Instance::unconstrained(f, p, "abs+x").unwrap();
        let r = solve(&inst, &SolverConfig::new(0.1, OracleMode::Exact).with_samples(2_000)).unwrap();
        assert!(r.value <= -1.0 + 0.1, "{}", r.value);
        assert_eq!(r.solution.x, vec![-1]);
    }
}
