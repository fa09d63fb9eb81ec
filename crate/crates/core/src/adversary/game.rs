use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::consistency::{consistent_at, Record};
use super::cont::{ContAdversary, MemberKind};
use super::extension::{psi_function, zero_one_fibers};
use super::family::HardFamily;
use super::mi::{mi_domain, MiAdversary};
use crate::instance::{integer_fibers, ClassParams, Instance, InstanceError, MaxAffineFunction, MixedPoint, Polytope};
use crate::linalg::dot;
use crate::lp::lp_feasible;
use crate::oracle::{apply_form, bit_equal, Oracle, OracleError, Query, Response, Target, Transcript};
use crate::recovery::RecoveryError;
use crate::solver::{solve_with_oracle, OracleMode, SolverConfig, SolverError};

/// The oracle a strategy plays against.
#[derive(Debug, Clone)]
pub enum Adversary {
    /// Continuous game on `[−R, R]^d`.
    Cont(ContAdversary),
    Mi(MiAdversary),
}

impl Adversary {
    pub fn n(&self) -> usize {
        match self {
            Adversary::Cont(_) => 0,
            Adversary::Mi(a) => a.n,
        }
    }

    pub fn fibers(&self) -> Vec<&ContAdversary> {
        match self {
            Adversary::Cont(a) => vec![a],
            Adversary::Mi(a) => a.fibers.iter().collect(),
        }
    }

    fn params(&self) -> (usize, f64, f64) {
        let f = self.fibers()[0];
        (f.d, f.radius, f.lipschitz)
    }

    /// A point that is `ε`-optimal for every surviving instance, if one exists.
    /// On fiber `x̄` this asks for `y` with `f(y) ≤ min(m_f, m_other) + ε` for
    /// every survivor `f` there, where `m_other` is the smallest optimum among
    /// survivors on the other fibers.
    pub fn common_solution(&self, eps: f64) -> Option<Vec<f64>> {
        let fibers = self.fibers();
        let mins: Vec<f64> = fibers
            .iter()
            .map(|f| f.survivors().iter().map(|&i| f.members[i].min_value).fold(f64::INFINITY, f64::min))
            .collect();
        let xs = zero_one_fibers(self.n());
        for (k, fib) in fibers.iter().enumerate() {
            let other = mins.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
            let mut rows = Vec::new();
            for i in fib.survivors() {
                let m = &fib.members[i];
                let cap = m.min_value.min(other) + eps;
                rows.extend(m.f.pieces.iter().map(|p| (p.a.clone(), cap - p.b)));
            }
            if let Some(y) = lp_feasible(&rows, fib.d, fib.radius) {
                return Some(xs[k].iter().map(|&v| v as f64).chain(y).collect());
            }
        }
        None
    }
}

/// The feasible region of the game.
pub fn game_domain(adv: &Adversary) -> Polytope {
    match adv {
        Adversary::Cont(a) => Polytope::cube(a.d, a.radius),
        Adversary::Mi(a) => a.domain.clone(),
    }
}

impl Oracle for Adversary {
    fn dim(&self) -> usize {
        match self {
            Adversary::Cont(a) => a.d,
            Adversary::Mi(a) => a.n + a.d,
        }
    }

    fn answer(&mut self, q: &Query) -> Result<Response, OracleError> {
        match self {
            Adversary::Cont(a) => {
                if q.target == Target::Sep {
                    crate::oracle::validate(q, a.d)?;
                    return Ok(apply_form(&q.form, &Polytope::cube(a.d, a.radius).separate(&q.point)));
                }
                a.respond(q)
            }
            Adversary::Mi(a) => a.answer(q),
        }
    }
}

/// What a strategy knows about the class it plays in.
#[derive(Debug, Clone, Copy)]
pub struct GameContext {
    pub n: usize,
    pub d: usize,
    pub radius: f64,
    pub lipschitz: f64,
    pub eps: f64,
}

/// A query strategy. Playing ends when the oracle returns `Stop`.
pub trait Strategy {
    fn name(&self) -> String;
    fn play(&mut self, oracle: &mut dyn Oracle, ctx: &GameContext) -> Result<(), OracleError>;
}

const STRATEGY_CAP: usize = 100_000;

/// Coordinate bisection on subgradient signs, round-robin over the 0/1 fibers.
#[derive(Debug, Clone, Copy, Default)]
pub struct BisectStrategy;

impl Strategy for BisectStrategy {
    fn name(&self) -> String {
        "bisect".into()
    }

    fn play(&mut self, oracle: &mut dyn Oracle, ctx: &GameContext) -> Result<(), OracleError> {
        let fibers = zero_one_fibers(ctx.n);
        let mut boxes = vec![vec![(-ctx.radius, ctx.radius); ctx.d]; fibers.len()];
        let mut steps = vec![0usize; fibers.len()];
        for round in 0..STRATEGY_CAP {
            let k = round % fibers.len();
            let axis = steps[k] % ctx.d;
            let y: Vec<f64> = boxes[k].iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
            let z: Vec<f64> = fibers[k].iter().map(|&v| v as f64).chain(y.iter().copied()).collect();
            let mut dir = vec![0.0; ctx.n + ctx.d];
            dir[ctx.n + axis] = 1.0;
            let r = oracle.answer(&Query::threshold(z, Target::Sub, dir, 0.0))?;
            if r == Response::Sign(1) {
                boxes[k][axis].1 = y[axis];
            } else {
                boxes[k][axis].0 = y[axis];
            }
            steps[k] += 1;
        }
        Ok(())
    }
}

/// Random threshold queries on values and subgradients.
#[derive(Debug, Clone, Copy)]
pub struct RandomStrategy {
    pub seed: u64,
}

impl Strategy for RandomStrategy {
    fn name(&self) -> String {
        format!("random-{}", self.seed)
    }

    fn play(&mut self, oracle: &mut dyn Oracle, ctx: &GameContext) -> Result<(), OracleError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let dim = ctx.n + ctx.d;
        for _ in 0..STRATEGY_CAP {
            let vertex = rng.gen_bool(0.5);
            let mut z: Vec<f64> = (0..ctx.n)
                .map(|_| if vertex { f64::from(u8::from(rng.gen_bool(0.5))) } else { rng.gen_range(0.0..=1.0) })
                .collect();
            z.extend((0..ctx.d).map(|_| rng.gen_range(-ctx.radius..=ctx.radius)));
            let q = if rng.gen_bool(0.5) {
                let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                Query::threshold(z, Target::Sub, dir, 0.0)
            } else {
                let c = rng.gen_range(0.0..=ctx.lipschitz.max(1.0) * ctx.radius);
                Query::threshold(z, Target::Val, vec![1.0], c)
            };
            oracle.answer(&q)?;
        }
        Ok(())
    }
}

/// Replays the dir-mode centerpoint solver against the game oracle.
#[derive(Debug, Clone, Copy)]
pub struct CenterpointStrategy {
    pub samples: usize,
    pub seed: u64,
}

impl Default for CenterpointStrategy {
    fn default() -> Self {
        Self { samples: 2000, seed: 0 }
    }
}

fn oracle_error(e: SolverError) -> Result<(), OracleError> {
    match e {
        SolverError::Oracle(o) | SolverError::Recovery(RecoveryError::Oracle(o)) => Err(o),
        SolverError::NoFeasibleFound => Ok(()),
        other => Err(OracleError::Internal(other.to_string())),
    }
}

impl Strategy for CenterpointStrategy {
    fn name(&self) -> String {
        "centerpoint".into()
    }

    fn play(&mut self, oracle: &mut dyn Oracle, ctx: &GameContext) -> Result<(), OracleError> {
        let m = if ctx.n > 0 { 3.0 * ctx.lipschitz * ctx.radius } else { ctx.lipschitz.max(1.0) };
        let params = ClassParams { n: ctx.n, d: ctx.d, radius: ctx.radius.max(1.0), rho: 0.5, lipschitz: m };
        let config = SolverConfig::new(ctx.eps, OracleMode::Dir).with_samples(self.samples).with_seed(self.seed);
        let bound = m * (ctx.n + ctx.d) as f64 * params.radius + 1.0;
        match solve_with_oracle(oracle, params, config, bound) {
            Ok(_) => Ok(()),
            Err(e) => oracle_error(e),
        }
    }
}

struct GameOracle<'a> {
    adversary: &'a mut Adversary,
    eps: f64,
    max_rounds: usize,
    rounds: usize,
    witness: Option<Vec<f64>>,
    records: Vec<(Vec<f64>, Record)>,
    transcript: Transcript,
}

impl Oracle for GameOracle<'_> {
    fn dim(&self) -> usize {
        self.adversary.dim()
    }

    fn answer(&mut self, q: &Query) -> Result<Response, OracleError> {
        if self.witness.is_some() || self.rounds >= self.max_rounds {
            return Err(OracleError::Stop);
        }
        let r = self.adversary.answer(q)?;
        self.rounds += 1;
        self.transcript.push(q, &r, self.rounds as u64);
        self.records.push((q.point.clone(), Record { target: q.target, form: q.form.clone(), response: r.clone() }));
        self.witness = self.adversary.common_solution(self.eps);
        Ok(r)
    }
}

/// Result of one game.
#[derive(Debug, Clone)]
pub struct GameOutcome {
    pub strategy: String,
    pub stop_round: usize,
    pub unambiguous: bool,
    pub witness: Option<Vec<f64>>,
    pub transcript: Transcript,
    pub records: Vec<(Vec<f64>, Record)>,
    pub adversary: Adversary,
    pub eps: f64,
}

/// JSON summary of a game.
#[derive(Debug, Clone, Serialize)]
pub struct GameSummary {
    pub strategy: String,
    pub n: usize,
    pub stop_round: usize,
    pub unambiguous: bool,
    pub witness: Option<Vec<f64>>,
    pub inner_queries: Vec<usize>,
    pub committed: Vec<bool>,
}

impl GameOutcome {
    pub fn summary(&self) -> GameSummary {
        let fibers = self.adversary.fibers();
        GameSummary {
            strategy: self.strategy.clone(),
            n: self.adversary.n(),
            stop_round: self.stop_round,
            unambiguous: self.unambiguous,
            witness: self.witness.clone(),
            inner_queries: fibers.iter().map(|f| f.inner_queries).collect(),
            committed: fibers.iter().map(|f| f.committed.is_some()).collect(),
        }
    }
}

/// Alternates strategy queries and adversary answers until the transcript is
/// `ε`-unambiguous or `max_rounds` queries were answered.
pub fn run_game(strategy: &mut dyn Strategy, mut adversary: Adversary, eps: f64, max_rounds: usize) -> Result<GameOutcome, OracleError> {
    let (d, radius, lipschitz) = adversary.params();
    let ctx = GameContext { n: adversary.n(), d, radius, lipschitz, eps };
    let initial = adversary.common_solution(eps);
    if initial.is_some() {
        return Ok(GameOutcome {
            strategy: strategy.name(),
            stop_round: 0,
            unambiguous: true,
            witness: initial,
            transcript: Transcript::default(),
            records: Vec::new(),
            adversary,
            eps,
        });
    }
    let mut go = GameOracle {
        adversary: &mut adversary,
        eps,
        max_rounds,
        rounds: 0,
        witness: None,
        records: Vec::new(),
        transcript: Transcript::default(),
    };
    match strategy.play(&mut go, &ctx) {
        Ok(()) | Err(OracleError::Stop) => {}
        Err(e) => return Err(e),
    }
    let GameOracle { rounds, witness, records, transcript, .. } = go;
    Ok(GameOutcome {
        strategy: strategy.name(),
        stop_round: rounds,
        unambiguous: witness.is_some(),
        witness,
        transcript,
        records,
        adversary,
        eps,
    })
}

/// The bundled strategies: bisection, five random seeds, centerpoint replay.
pub fn bundled_strategies() -> Vec<Box<dyn Strategy>> {
    let mut out: Vec<Box<dyn Strategy>> = vec![Box::new(BisectStrategy)];
    for seed in 1..=5 {
        out.push(Box::new(RandomStrategy { seed }));
    }
    out.push(Box::new(CenterpointStrategy::default()));
    out
}

/// Hardness `ℓ` of a continuous family: the smallest stop round of the given
/// strategies against the never-committing adversary.
pub fn measure_hardness(
    family: &HardFamily,
    strategies: &mut [Box<dyn Strategy>],
    max_rounds: usize,
) -> Result<(usize, Vec<(String, usize)>), OracleError> {
    let mut rows = Vec::new();
    for s in strategies.iter_mut() {
        let out = run_game(s.as_mut(), Adversary::Cont(ContAdversary::new(family, None)), family.eps, max_rounds)?;
        rows.push((out.strategy, out.stop_round));
    }
    let ell = rows.iter().map(|r| r.1).min().unwrap_or(0);
    Ok((ell, rows))
}

/// `ψ_F` over the game domain as an instance.
pub fn psi_instance(fibers: &[MaxAffineFunction], n: usize, family: &HardFamily) -> Result<Instance, InstanceError> {
    let (m, r) = (family.lipschitz, family.radius);
    let objective = if n == 0 { fibers[0].clone() } else { psi_function(fibers, n, m, r, family.opt) };
    let params = ClassParams { n, d: family.d, radius: r.max(1.0), rho: 0.0, lipschitz: 3.0 * m * r * n as f64 + m };
    Instance::new(objective, mi_domain(n, family.d, r), params, "psi")
}

/// Whether a collection of instances has a common `ε`-approximate solution:
/// one LP per integer fiber of the first instance's box.
pub fn check_unambiguous(instances: &[Instance], eps: f64) -> Result<Option<MixedPoint>, InstanceError> {
    let Some(first) = instances.first() else { return Ok(None) };
    let (n, d, radius) = (first.params.n, first.params.d, first.params.radius);
    let opts = instances.iter().map(|i| i.brute_force_opt().map(|o| o.value)).collect::<Result<Vec<_>, _>>()?;
    for x in integer_fibers(n, radius)? {
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let mut rows = Vec::new();
        for (inst, opt) in instances.iter().zip(&opts) {
            for p in &inst.objective.pieces {
                rows.push((p.a[n..].to_vec(), opt + eps - p.b - dot(&p.a[..n], &xf)));
            }
            rows.extend(inst.feasible.fiber_rows(&xf));
        }
        if d == 0 {
            let z: Vec<f64> = Vec::new();
            if rows.iter().all(|(_, c)| *c >= -1e-12) {
                return Ok(Some(MixedPoint::new(x, z)));
            }
            continue;
        }
        if let Some(y) = lp_feasible(&rows, d, radius) {
            return Ok(Some(MixedPoint::new(x, y)));
        }
    }
    Ok(None)
}

fn group_records(records: &[(Vec<f64>, Record)]) -> Vec<(Vec<f64>, Vec<&Record>)> {
    let mut groups: Vec<(Vec<f64>, Vec<&Record>)> = Vec::new();
    for (z, r) in records {
        match groups.iter_mut().find(|(p, _)| bit_equal(p, z)) {
            Some(g) => g.1.push(r),
            None => groups.push((z.clone(), vec![r])),
        }
    }
    groups
}

/// Replays the transcript of a finished game against `ψ_F` for the canonical
/// survivor collection (committed functions where alive) and `samples − 1`
/// random ones. Returns the number of collections verified.
pub fn verify_consistency(outcome: &GameOutcome, family: &HardFamily, samples: usize, seed: u64) -> Result<usize, String> {
    let fibers = outcome.adversary.fibers();
    let n = outcome.adversary.n();
    let domain = game_domain(&outcome.adversary);
    let groups = group_records(&outcome.records);
    let survivors: Vec<Vec<usize>> = fibers.iter().map(|f| f.survivors()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for s in 0..samples.max(1) {
        let choice: Vec<usize> = fibers
            .iter()
            .zip(&survivors)
            .map(|(f, alive)| {
                if s == 0 {
                    alive.iter().copied().find(|&i| f.members[i].kind == MemberKind::Commit).unwrap_or(alive[0])
                } else {
                    alive[rng.gen_range(0..alive.len())]
                }
            })
            .collect();
        let fs: Vec<MaxAffineFunction> = fibers.iter().zip(&choice).map(|(f, &i)| f.members[i].f.clone()).collect();
        let inst = psi_instance(&fs, n, family).map_err(|e| e.to_string())?;
        for (z, recs) in &groups {
            let sep = domain.separate(z);
            for r in recs.iter().filter(|r| r.target == Target::Sep) {
                if !apply_form(&r.form, &sep).same(&r.response) {
                    return Err(format!("separation answer at {z:?} not reproduced"));
                }
            }
            if !consistent_at(&inst.objective, z, recs) {
                return Err(format!("collection {choice:?} contradicts the answers at {z:?}"));
            }
        }
        checked += 1;
    }
    Ok(checked)
}
