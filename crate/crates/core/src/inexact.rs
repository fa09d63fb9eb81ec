//! Running exact-oracle methods against inexact oracles: consistent
//! under-approximations of the objective, outer approximations of the feasible
//! region, and an online procedure for approximate projections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::halving::{ExactCenterpoint, WrappedAlgorithm};
use crate::instance::{Halfspace, Instance, InstanceError, MixedPoint, Polytope};
use crate::linalg::{dist2, dot, norm2, normalized, scale, sub};
use crate::oracle::{chart_output, Target};
use crate::solver::{CenterpointRun, OracleMode, SolverConfig, SolverError, StopRule};

/// Comparison slack for the update cases.
pub const AUA_TOL: f64 = 1e-12;
/// Stopping tolerance of the alternating-projection iterations.
pub const DYKSTRA_TOL: f64 = 1e-9;
const DYKSTRA_MAX_CYCLES: usize = 200_000;
/// `c = 2√6` from the cap-diameter bound.
pub const CAP_CONSTANT: f64 = 4.898_979_485_566_356;

#[derive(Debug, Error)]
pub enum InexactError {
    #[error("no nonzero normal through the query point keeps every known feasible point")]
    DegenerateTilt,
    #[error("{0}")]
    Unsupported(String),
    #[error("the wrapped algorithm never saw a feasible point")]
    NoFeasibleFound,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// `L(y) = value + ⟨slope, y − z⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Support {
    pub z: Vec<f64>,
    pub value: f64,
    pub slope: Vec<f64>,
}

impl Support {
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.value + dot(&self.slope, &sub(y, &self.z))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuaCase {
    /// The candidate violated nothing.
    Append,
    /// The candidate value sat below the model; the model's own support was reported.
    Supporting,
    /// The candidate was shifted down to stop cutting off an earlier point.
    Shifted { shift: f64 },
    /// The shifted candidate fell below the model and was replaced by its support.
    ShiftedSupporting { shift: f64 },
}

/// `model(y) = max_i L̃_i(y)` over the reported supports.
#[derive(Debug, Clone, Default, Serialize)]
pub struct UnderModel {
    pub supports: Vec<Support>,
    pub accumulated_slack: f64,
}

impl UnderModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// `−∞` while empty.
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.supports.iter().map(|s| s.eval(y)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// The lowest-index active support at `z`, as an affine through `z`.
    pub fn supporting(&self, z: &[f64]) -> Support {
        let m = self.eval(z);
        let tol = AUA_TOL * (1.0 + m.abs());
        let s = self.supports.iter().find(|s| s.eval(z) >= m - tol).expect("nonempty model");
        Support { z: z.to_vec(), value: m, slope: s.slope.clone() }
    }

    /// Adds the answer to an oracle report `(v, g)` at `z` and returns it. The
    /// report's error is never consulted.
    pub fn aua_update(&mut self, z: &[f64], v: f64, g: &[f64]) -> (AuaCase, Support) {
        let cand = Support { z: z.to_vec(), value: v, slope: g.to_vec() };
        if self.supports.is_empty() {
            self.supports.push(cand.clone());
            return (AuaCase::Append, cand);
        }
        let m = self.eval(z);
        let tol = AUA_TOL * (1.0 + m.abs());
        let (case, out) = if v < m - tol {
            (AuaCase::Supporting, self.supporting(z))
        } else {
            let shift = self
                .supports
                .iter()
                .map(|s| cand.eval(&s.z) - self.eval(&s.z))
                .fold(f64::NEG_INFINITY, f64::max);
            if shift <= tol {
                (AuaCase::Append, cand)
            } else if v - shift < m - tol {
                (AuaCase::ShiftedSupporting { shift }, self.supporting(z))
            } else {
                (AuaCase::Shifted { shift }, Support { value: v - shift, ..cand })
            }
        };
        self.supports.push(out.clone());
        (case, out)
    }

    /// Adds a per-query error bound to the tracked slack.
    pub fn charge(&mut self, bound: f64) {
        self.accumulated_slack += bound;
    }

    /// `max_i |model(z_i) − L̃_i(z_i)|`.
    pub fn consistency_violation(&self) -> f64 {
        self.supports.iter().map(|s| (self.eval(&s.z) - s.value).abs()).fold(0.0, f64::max)
    }

    /// `h(y) = max{f(y) − slack, model(y)}` given `f(y)`.
    pub fn certificate(&self, f_y: f64, y: &[f64]) -> f64 {
        (f_y - self.accumulated_slack).max(self.eval(y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AoaCase {
    FeasibleInside,
    FeasibleOutside,
    Accepted,
    Tilted,
}

/// What the separation oracle reported at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum SepReport {
    Feasible,
    Infeasible(Vec<f64>),
}

/// Intersection of the box and the accumulated cuts, plus the points reported feasible.
#[derive(Debug, Clone, Serialize)]
pub struct OuterModel {
    pub region: Polytope,
    pub known_feasible: Vec<Vec<f64>>,
}

impl OuterModel {
    pub fn new(dim: usize, radius: f64) -> Self {
        Self { region: Polytope::cube(dim, radius), known_feasible: Vec::new() }
    }

    /// Updates with the oracle's report at `x`; returns the case and the
    /// report passed on to the algorithm.
    pub fn aoa_update(&mut self, x: &[f64], report: SepReport) -> Result<(AoaCase, SepReport), InexactError> {
        match report {
            SepReport::Feasible if self.region.contains(x) => {
                self.known_feasible.push(x.to_vec());
                Ok((AoaCase::FeasibleInside, SepReport::Feasible))
            }
            SepReport::Feasible => Ok((AoaCase::FeasibleOutside, SepReport::Infeasible(self.region.separate(x)))),
            SepReport::Infeasible(g) => {
                let gx = dot(&g, x);
                let keeps = self.known_feasible.iter().all(|y| dot(&g, y) <= gx + AUA_TOL * (1.0 + gx.abs()));
                let (case, g) = if keeps {
                    (AoaCase::Accepted, g)
                } else {
                    (AoaCase::Tilted, tilt_separator(&g, x, &self.known_feasible)?)
                };
                let c = dot(&g, x);
                self.region.halfspaces.push(Halfspace::new(g.clone(), c)?);
                Ok((case, SepReport::Infeasible(g)))
            }
        }
    }
}

fn project_halfspace(g: &mut [f64], a: &[f64], b: f64) {
    let v = dot(g, a) - b;
    if v > 0.0 {
        for (gi, ai) in g.iter_mut().zip(a) {
            *gi -= v * ai;
        }
    }
}

/// Dykstra's alternating projection of `x0` onto `box ∩ ⋂ {⟨a_j, y⟩ ≤ b_j}`
/// with unit `a_j`.
fn dykstra(x0: &[f64], bound: Option<f64>, rows: &[(Vec<f64>, f64)]) -> Vec<f64> {
    let dim = x0.len();
    let sets = rows.len() + usize::from(bound.is_some());
    let mut x = x0.to_vec();
    let mut incr = vec![vec![0.0; dim]; sets];
    for _ in 0..DYKSTRA_MAX_CYCLES {
        let start = x.clone();
        for (k, p) in incr.iter_mut().enumerate() {
            let mut y: Vec<f64> = x.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
            let before = y.clone();
            match (bound, k) {
                (Some(r), 0) => y.iter_mut().for_each(|v| *v = v.clamp(-r, r)),
                _ => {
                    let (a, b) = &rows[k - usize::from(bound.is_some())];
                    project_halfspace(&mut y, a, *b);
                }
            }
            for i in 0..dim {
                p[i] = before[i] - y[i];
            }
            x = y;
        }
        let worst = rows.iter().map(|(a, b)| dot(a, &x) - b).fold(0.0, f64::max);
        let out = bound.map_or(0.0, |r| x.iter().map(|v| v.abs() - r).fold(0.0, f64::max));
        if dist2(&start, &x) <= 1e-3 * DYKSTRA_TOL * (1.0 + norm2(&x)) && worst.max(out) <= DYKSTRA_TOL {
            break;
        }
    }
    x
}

/// The unit vector nearest `g_hat` among normals `g` with `⟨g, y⟩ ≤ ⟨g, x⟩` for
/// every `y ∈ Y`.
pub fn tilt_separator(g_hat: &[f64], x: &[f64], y: &[Vec<f64>]) -> Result<Vec<f64>, InexactError> {
    let rows: Vec<(Vec<f64>, f64)> = y.iter().filter_map(|p| normalized(&sub(p, x)).map(|a| (a, 0.0))).collect();
    if rows.iter().all(|(a, _)| dot(a, g_hat) <= 0.0) {
        return Ok(g_hat.to_vec());
    }
    let g = dykstra(g_hat, None, &rows);
    if norm2(&g) <= 1e-9 * norm2(g_hat).max(1.0) {
        return Err(InexactError::DegenerateTilt);
    }
    Ok(normalized(&g).expect("nonzero"))
}

/// Euclidean projection onto a polytope.
pub fn project_polytope(p: &Polytope, x: &[f64]) -> Vec<f64> {
    let rows: Vec<(Vec<f64>, f64)> = p.halfspaces.iter().map(|h| (h.normal.clone(), h.offset)).collect();
    dykstra(x, Some(p.radius), &rows)
}

/// A compact convex set with an exact projection.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Ball { center: Vec<f64>, radius: f64 },
    Poly(Polytope),
}

impl ConvexBody {
    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.len(),
            Self::Poly(p) => p.dim,
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Ball { center, radius } => {
                let v = sub(x, center);
                let r = norm2(&v);
                if r <= *radius {
                    x.to_vec()
                } else {
                    center.iter().zip(&v).map(|(c, vi)| c + vi * radius / r).collect()
                }
            }
            Self::Poly(p) => project_polytope(p, x),
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Self::Ball { center, radius } => (dist2(x, center) - radius).max(0.0),
            Self::Poly(_) => dist2(x, &self.project(x)),
        }
    }

    /// Points of the set: half on the boundary for a ball, rejection samples
    /// from the box for a polytope.
    pub fn sample(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        match self {
            Self::Ball { center, radius } => {
                while out.len() < count {
                    let u = unit_ball_point(center.len(), rng);
                    let t = if out.len() % 2 == 0 { radius / norm2(&u).max(1e-300) } else { *radius };
                    out.push(center.iter().zip(&u).map(|(c, ui)| c + t * ui).collect());
                }
            }
            Self::Poly(p) => {
                for _ in 0..1000 * count {
                    if out.len() == count {
                        break;
                    }
                    let z: Vec<f64> = (0..p.dim).map(|_| rng.gen_range(-p.radius..=p.radius)).collect();
                    if p.contains(&z) {
                        out.push(z);
                    }
                }
            }
        }
        out
    }
}

fn unit_ball_point(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let r = norm2(&u);
        if r <= 1.0 && r > 1e-12 {
            return u;
        }
    }
}

/// A perturbation of norm at most `size`.
fn perturbation(dim: usize, size: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    scale(&unit_ball_point(dim, rng), size)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionCase {
    Far { shift: f64 },
    Near,
}

/// State of the online approximate-projection procedure.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionState {
    /// Current outer set, kept inside the box.
    pub p: Polytope,
    /// Euclidean diameter bound `2R√d` of the box.
    pub diameter: f64,
    /// Upper bound on the projection oracle's error.
    pub delta_cap: f64,
    pub returned: Vec<(Vec<f64>, Vec<f64>)>,
    pub error_track: Vec<f64>,
    pub cases: Vec<ProjectionCase>,
}

impl ProjectionState {
    pub fn new(dim: usize, radius: f64, delta_cap: f64) -> Self {
        Self {
            p: Polytope::cube(dim, radius),
            diameter: 2.0 * radius * (dim as f64).sqrt(),
            delta_cap,
            returned: Vec::new(),
            error_track: Vec::new(),
            cases: Vec::new(),
        }
    }

    /// `V = √(diameter · δ_cap)`.
    pub fn default_threshold(&self) -> f64 {
        (self.diameter * self.delta_cap).sqrt()
    }

    /// The current error bound `ε_i` (zero before the first step).
    pub fn current_error(&self) -> f64 {
        self.error_track.last().copied().unwrap_or(0.0)
    }

    /// Turns an approximate projection of `x` into the projection returned to
    /// the algorithm.
    pub fn project_online(&mut self, x: &[f64], pi_tilde: &[f64], v: f64) -> Vec<f64> {
        let pt = project_polytope(&self.p, pi_tilde);
        let dp = 2.0 * self.delta_cap;
        let prev = self.current_error();
        let r = dist2(x, &pt);
        let (case, err) = if r >= v && r > 1e-12 {
            let s = 4.0 * self.diameter * dp / r;
            let u = scale(&sub(x, &pt), 1.0 / r);
            let c = dot(&u, &pt) + s + prev;
            self.p.halfspaces.push(Halfspace::new(u, c).expect("unit normal"));
            let base = s + prev;
            let err = (2.0 * base + dp).max(CAP_CONSTANT * (self.diameter * base).sqrt() + dp).max(prev);
            (ProjectionCase::Far { shift: s }, err)
        } else {
            (ProjectionCase::Near, (2.0 * v + dp).max(prev))
        };
        let pi_bar = project_polytope(&self.p, x);
        self.returned.push((x.to_vec(), pi_bar.clone()));
        self.error_track.push(err);
        self.cases.push(case);
        pi_bar
    }

    /// `max_i ‖π̄_i − proj_P(x_i)‖` for the current `P`.
    pub fn stability_error(&self) -> f64 {
        self.returned.iter().map(|(x, pb)| dist2(pb, &project_polytope(&self.p, x))).fold(0.0, f64::max)
    }
}

/// Per-step audit of the projection procedure.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionAudit {
    pub steps: usize,
    /// `max_i (dist(π̄_i, C) − ε_i)`; nonpositive when every bound holds.
    pub max_excess: f64,
    pub max_distance: f64,
    pub final_error: f64,
    /// Sampled points of `C` outside some `P_i`.
    pub containment_failures: usize,
    pub stability_error: f64,
    pub far_steps: usize,
}

/// Runs the procedure on `steps` random points of the box with projections
/// perturbed by at most `delta`, checking `P_i ⊇ C` on `samples` points after
/// every step.
pub fn projection_harness(
    body: &ConvexBody,
    radius: f64,
    delta: f64,
    steps: usize,
    samples: usize,
    seed: u64,
) -> ProjectionAudit {
    let dim = body.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = body.sample(samples, &mut rng);
    let mut st = ProjectionState::new(dim, radius, delta);
    let v = st.default_threshold();
    let mut audit = ProjectionAudit {
        steps,
        max_excess: f64::NEG_INFINITY,
        max_distance: 0.0,
        final_error: 0.0,
        containment_failures: 0,
        stability_error: 0.0,
        far_steps: 0,
    };
    for _ in 0..steps {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
        let exact = body.project(&x);
        let noise = perturbation(dim, delta, &mut rng);
        let pi_tilde: Vec<f64> = exact.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let pi_bar = st.project_online(&x, &pi_tilde, v);
        let dist = body.distance(&pi_bar);
        audit.max_distance = audit.max_distance.max(dist);
        audit.max_excess = audit.max_excess.max(dist - st.current_error());
        audit.containment_failures += pts
            .iter()
            .filter(|y| st.p.halfspaces.iter().any(|h| h.violation(y) > DYKSTRA_TOL))
            .count();
    }
    audit.final_error = st.current_error();
    audit.stability_error = st.stability_error();
    audit.far_steps = st.cases.iter().filter(|c| matches!(c, ProjectionCase::Far { .. })).count();
    audit
}

/// Per-query error caps of a noisy first-order oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Noise {
    pub eta_f: f64,
    pub eta_g: f64,
}

impl Noise {
    pub fn exact() -> Self {
        Self { eta_f: 0.0, eta_g: 0.0 }
    }

    /// `η_f + η_g`.
    pub fn per_query(&self) -> f64 {
        self.eta_f + self.eta_g
    }
}

/// An `(η_f, η_g)`-inexact oracle for an instance: values off by at most `η_f`,
/// subgradients by at most `η_g/(2R√dim)` in ℓ2, and unit separators within
/// the same distance of an exact unit separator.
#[derive(Debug, Clone)]
pub struct NoisyOracle<'a> {
    pub inst: &'a Instance,
    pub noise: Noise,
    pub queries: usize,
    rng: ChaCha8Rng,
}

impl<'a> NoisyOracle<'a> {
    pub fn new(inst: &'a Instance, noise: Noise, seed: u64) -> Self {
        Self { inst, noise, queries: 0, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn gradient_radius(&self) -> f64 {
        let p = &self.inst.params;
        self.noise.eta_g / (2.0 * p.radius * (p.dim() as f64).sqrt())
    }

    pub fn separate(&mut self, z: &[f64]) -> SepReport {
        self.queries += 1;
        let g = self.inst.feasible.separate(z);
        if g.iter().all(|v| *v == 0.0) {
            return SepReport::Feasible;
        }
        let w = perturbation(g.len(), self.gradient_radius() / 2.0, &mut self.rng);
        let noisy: Vec<f64> = g.iter().zip(&w).map(|(a, b)| a + b).collect();
        SepReport::Infeasible(normalized(&noisy).unwrap_or(g))
    }

    pub fn first_order(&mut self, z: &[f64]) -> (f64, Vec<f64>) {
        self.queries += 1;
        let v = self.inst.objective.eval(z) + self.rng.gen_range(-1.0..=1.0) * self.noise.eta_f;
        let g = self.inst.objective.subgradient(z);
        let w = perturbation(g.len(), self.gradient_radius(), &mut self.rng);
        (v, g.iter().zip(&w).map(|(a, b)| a + b).collect())
    }
}

/// Plain subgradient descent from the box centre with steps `R/√(t+1)` along
/// normalised (sub)gradients or separators, clamped to the box.
#[derive(Debug, Clone)]
pub struct SubgradientDescent {
    pub z: Vec<f64>,
    pub radius: f64,
    pub rounds: usize,
    pub t: usize,
    pub feasible: Vec<(Vec<f64>, f64)>,
}

impl SubgradientDescent {
    pub fn new(dim: usize, radius: f64, rounds: usize) -> Self {
        Self { z: vec![0.0; dim], radius, rounds, t: 0, feasible: Vec::new() }
    }
}

impl WrappedAlgorithm for SubgradientDescent {
    fn next_point(&mut self) -> Option<Vec<f64>> {
        (self.t < self.rounds).then(|| self.z.clone())
    }

    fn observe(&mut self, info: &[f64]) {
        let dim = self.z.len();
        let g = if info.len() == dim {
            info.to_vec()
        } else {
            self.feasible.push((self.z.clone(), info[0]));
            info[1..].to_vec()
        };
        let h = self.radius / ((self.t + 1) as f64).sqrt();
        if let Some(u) = normalized(&g) {
            for (zi, ui) in self.z.iter_mut().zip(&u) {
                *zi = (*zi - h * ui).clamp(-self.radius, self.radius);
            }
        }
        self.t += 1;
    }

    fn budget(&self) -> usize {
        self.rounds
    }

    fn answer(&self) -> Option<(Vec<f64>, f64)> {
        self.feasible.iter().min_by(|a, b| a.1.total_cmp(&b.1)).cloned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RobustAlgo {
    Subgradient,
    Centerpoint,
}

impl RobustAlgo {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "subgradient" => Some(Self::Subgradient),
            "centerpoint" => Some(Self::Centerpoint),
            _ => None,
        }
    }

    pub fn build(self, inst: &Instance, rounds: usize, seed: u64) -> Result<Box<dyn WrappedAlgorithm>, InexactError> {
        let p = inst.params;
        match self {
            Self::Subgradient if p.n > 0 => {
                Err(InexactError::Unsupported("subgradient descent needs a purely continuous instance".into()))
            }
            Self::Subgradient => Ok(Box::new(SubgradientDescent::new(p.dim(), p.radius, rounds))),
            Self::Centerpoint => {
                let mut config = SolverConfig::new(0.05, OracleMode::Exact)
                    .with_samples(2000)
                    .with_seed(seed)
                    .with_stop(StopRule::Budget);
                config.max_iterations = Some(rounds.max(1));
                Ok(Box::new(ExactCenterpoint { run: CenterpointRun::new(p, config)? }))
            }
        }
    }
}

/// The interface between an exact-information algorithm and a noisy oracle.
#[derive(Debug, Clone)]
pub struct RobustInterface<'a> {
    pub oracle: NoisyOracle<'a>,
    pub under: UnderModel,
    pub outer: OuterModel,
    pub aua_cases: Vec<AuaCase>,
    pub aoa_cases: Vec<AoaCase>,
}

impl<'a> RobustInterface<'a> {
    pub fn new(inst: &'a Instance, noise: Noise, seed: u64) -> Self {
        Self {
            oracle: NoisyOracle::new(inst, noise, seed),
            under: UnderModel::new(),
            outer: OuterModel::new(inst.params.dim(), inst.params.radius),
            aua_cases: Vec::new(),
            aoa_cases: Vec::new(),
        }
    }

    /// The exact-format record (`Info` layout) reported at `z`.
    pub fn respond(&mut self, z: &[f64]) -> Result<Vec<f64>, InexactError> {
        let sep = self.oracle.separate(z);
        let (case, reply) = self.outer.aoa_update(z, sep)?;
        self.aoa_cases.push(case);
        if let SepReport::Infeasible(g) = reply {
            return Ok(g);
        }
        let (v, g) = self.oracle.first_order(z);
        let (case, s) = self.under.aua_update(z, v, &g);
        self.under.charge(self.oracle.noise.per_query());
        self.aua_cases.push(case);
        Ok(std::iter::once(s.value).chain(s.slope).collect())
    }
}

/// Answer of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub solution: MixedPoint,
    pub value: f64,
    pub gap: f64,
    pub rounds: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustAudit {
    /// `max_y (model(y) − f(y) − slack)` over the grid.
    pub sandwich_excess: f64,
    /// `max_i (f(z_i) − slack − model(z_i))` over supports.
    pub support_deficit: f64,
    pub consistency_violation: f64,
    /// Grid points of `C` at depth `depth` outside the outer model.
    pub depth: f64,
    pub deep_points: usize,
    pub deep_outside: usize,
    pub known_outside: usize,
}

impl RobustAudit {
    pub fn ok(&self) -> bool {
        self.sandwich_excess <= 1e-9
            && self.support_deficit <= 1e-9
            && self.consistency_violation <= 1e-9
            && self.deep_outside == 0
            && self.known_outside == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustReport {
    pub algo: RobustAlgo,
    pub label: String,
    pub noise: Noise,
    pub true_optimum: f64,
    pub exact: RunSummary,
    pub noisy: RunSummary,
    /// `exact gap + 2kη` with `k` the noisy run's rounds and `η = η_f + η_g`.
    pub bound: f64,
    pub within_bound: bool,
    pub slack: f64,
    pub aua_cases: Vec<AuaCase>,
    pub aoa_cases: Vec<AoaCase>,
    pub audit: RobustAudit,
}

fn drive(
    algo: &mut dyn WrappedAlgorithm,
    inst: &Instance,
    opt: f64,
    mut info: impl FnMut(&[f64]) -> Result<Vec<f64>, InexactError>,
) -> Result<RunSummary, InexactError> {
    let mut rounds = 0;
    while let Some(z) = algo.next_point() {
        let h = info(&z)?;
        algo.observe(&h);
        rounds += 1;
    }
    let (z, _) = algo.answer().ok_or(InexactError::NoFeasibleFound)?;
    let value = inst.eval(&z);
    Ok(RunSummary { solution: MixedPoint::from_dense(&z, inst.params.n), value, gap: value - opt, rounds })
}

/// Grid with about `target` points over the box.
pub fn box_grid(dim: usize, radius: f64, target: usize) -> Vec<Vec<f64>> {
    let mut per = 2usize;
    while per.pow(dim as u32) < target {
        per += 1;
    }
    let total = per.pow(dim as u32);
    (0..total)
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let i = k % per;
                    k /= per;
                    -radius + 2.0 * radius * i as f64 / (per - 1) as f64
                })
                .collect()
        })
        .collect()
}

fn euclid_deep(c: &Polytope, z: &[f64], r: f64) -> bool {
    z.iter().all(|v| v.abs() + r <= c.radius) && c.halfspaces.iter().all(|h| dot(&h.normal, z) + r <= h.offset)
}

/// Audits the interface state against the true instance.
pub fn audit_interface(iface: &RobustInterface, inst: &Instance, grid_target: usize) -> RobustAudit {
    let p = &inst.params;
    let slack = iface.under.accumulated_slack;
    let grid = box_grid(p.dim(), p.radius, grid_target);
    let sandwich_excess = grid
        .iter()
        .map(|y| iface.under.eval(y) - inst.objective.eval(y) - slack)
        .fold(f64::NEG_INFINITY, f64::max);
    let support_deficit = iface
        .under
        .supports
        .iter()
        .map(|s| inst.objective.eval(&s.z) - slack - iface.under.eval(&s.z))
        .fold(f64::NEG_INFINITY, f64::max);
    let tilted = iface.aoa_cases.contains(&AoaCase::Tilted);
    let depth = (if tilted { 2.0 } else { 1.0 } * iface.oracle.noise.eta_g).max(1e-9);
    let deep: Vec<&Vec<f64>> = grid.iter().filter(|z| euclid_deep(&inst.feasible, z, depth)).collect();
    let deep_outside = deep.iter().filter(|z| !iface.outer.region.contains(z)).count();
    let known_outside = iface
        .outer
        .known_feasible
        .iter()
        .filter(|y| iface.outer.region.halfspaces.iter().any(|h| h.violation(y) > DYKSTRA_TOL))
        .count();
    RobustAudit {
        sandwich_excess,
        support_deficit,
        consistency_violation: iface.under.consistency_violation(),
        depth,
        deep_points: deep.len(),
        deep_outside,
        known_outside,
    }
}

/// Runs `algo` for `rounds` rounds with exact information and through the
/// interface against noise `noise`, and compares the two answers.
pub fn robustify(
    inst: &Instance,
    algo: RobustAlgo,
    noise: Noise,
    rounds: usize,
    seed: u64,
) -> Result<RobustReport, InexactError> {
    let opt = inst.brute_force_opt()?.value;
    let mut base = algo.build(inst, rounds, seed)?;
    let exact = drive(base.as_mut(), inst, opt, |z| Ok(chart_output(inst, z, Target::Info)))?;
    let mut wrapped = algo.build(inst, rounds, seed)?;
    let mut iface = RobustInterface::new(inst, noise, seed ^ 0x5eed);
    let noisy = drive(wrapped.as_mut(), inst, opt, |z| iface.respond(z))?;
    let bound = exact.gap + 2.0 * noisy.rounds as f64 * noise.per_query();
    let audit = audit_interface(&iface, inst, 1000);
    Ok(RobustReport {
        algo,
        label: inst.label.clone(),
        noise,
        true_optimum: opt,
        within_bound: noisy.gap <= bound + 1e-12,
        exact,
        noisy,
        bound,
        slack: iface.under.accumulated_slack,
        aua_cases: iface.aua_cases,
        aoa_cases: iface.aoa_cases,
        audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::MaxAffineFunction;
    use crate::suite::{random_instance, GeneratorSpec};

    #[test]
    fn exact_tangents_always_append() {
        let f = MaxAffineFunction::from_rows(&[vec![1.0, -0.5, 0.0], vec![-0.3, 0.2, 0.1], vec![0.0, 1.0, -0.2]]).unwrap();
        let mut m = UnderModel::new();
        for k in 0..30 {
            let z = vec![(k as f64 * 0.37).sin(), (k as f64 * 0.91).cos()];
            let (case, _) = m.aua_update(&z, f.eval(&z), &f.subgradient(&z));
            assert_eq!(case, AuaCase::Append);
        }
        for y in box_grid(2, 1.0, 400) {
            assert!(m.eval(&y) <= f.eval(&y) + 1e-12);
        }
    }

    fn shift_of(case: AuaCase) -> f64 {
        match case {
            AuaCase::Shifted { shift } | AuaCase::ShiftedSupporting { shift } => shift,
            _ => 0.0,
        }
    }

    #[test]
    fn inflated_abs_tangents_shift_little() {
        // f = |y| queried at ±1 with the value inflated by 0.1 and slopes off by η_g/2.
        let eta_g = 1e-3;
        for (first, second) in [(1.0, -1.0), (-1.0, 1.0)] {
            let mut m = UnderModel::new();
            let g1 = f64::signum(first) * (1.0 + eta_g / 2.0);
            let g2 = f64::signum(second) * (1.0 - eta_g / 2.0);
            m.aua_update(&[first], 1.1, &[g1]);
            let (case, _) = m.aua_update(&[second], 1.1, &[g2]);
            assert!(shift_of(case) <= 0.1 + eta_g);
            assert!(m.consistency_violation() < 1e-12);
        }
    }

    #[test]
    fn cut_off_point_triggers_shift() {
        let mut m = UnderModel::new();
        m.aua_update(&[-1.0], 1.0, &[-1.0]);
        m.aua_update(&[1.0], 1.1, &[1.0]);
        // 0.9 + 0.8(y − 0.5) reaches 1.3 at y = 1 where the model is 1.1.
        let (case, s) = m.aua_update(&[0.5], 0.9, &[0.8]);
        assert!(matches!(case, AuaCase::Shifted { .. }));
        assert!((shift_of(case) - 0.2).abs() < 1e-12);
        assert!((s.value - 0.7).abs() < 1e-12);
        assert!(m.consistency_violation() < 1e-12);
        // A steeper report falls below the model once shifted.
        let (case, s) = m.aua_update(&[0.0], 0.4, &[1.5]);
        assert!(matches!(case, AuaCase::ShiftedSupporting { .. }), "{case:?}");
        assert!((s.value - m.eval(&[0.0])).abs() < 1e-12);
        assert!(m.consistency_violation() < 1e-12);
    }

    #[test]
    fn value_below_model_uses_supporting_affine() {
        let mut m = UnderModel::new();
        m.aua_update(&[-1.0], 1.0, &[-1.0]);
        m.aua_update(&[1.0], 1.0, &[1.0]);
        let before: Vec<f64> = (0..21).map(|i| m.eval(&[-1.0 + 0.1 * i as f64])).collect();
        let (case, s) = m.aua_update(&[0.5], 0.3, &[1.0]);
        assert_eq!(case, AuaCase::Supporting);
        assert_eq!(s.value, 0.5);
        let after: Vec<f64> = (0..21).map(|i| m.eval(&[-1.0 + 0.1 * i as f64])).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn certificate_matches_reports() {
        let inst = random_instance(&GeneratorSpec::standard(0, 2), 3);
        let mut iface = RobustInterface::new(&inst, Noise { eta_f: 5e-4, eta_g: 5e-4 }, 1);
        for y in box_grid(2, 1.0, 49) {
            iface.respond(&y).unwrap();
        }
        let m = &iface.under;
        for s in &m.supports {
            let h = m.certificate(inst.objective.eval(&s.z), &s.z);
            assert!((h - s.value).abs() < 1e-9);
        }
    }

    #[test]
    fn tilt_keeps_satisfied_normal() {
        let g = tilt_separator(&[1.0, 0.0], &[1.0, 0.0], &[vec![0.0, 0.0], vec![0.5, 0.3]]).unwrap();
        assert_eq!(g, vec![1.0, 0.0]);
    }

    #[test]
    fn tilt_single_constraint_closed_form() {
        let x = [0.0, 0.0];
        let y = vec![vec![1.0, 1.0]];
        let g_hat = [1.0, 0.0];
        let g = tilt_separator(&g_hat, &x, &y).unwrap();
        // Projection of (1,0) onto ⟨g,(1,1)⟩ ≤ 0 is (0.5,−0.5).
        let want = normalized(&[0.5, -0.5]).unwrap();
        assert!(dist2(&g, &want) < 1e-9);
    }

    #[test]
    fn tilt_degenerate_cone_errors() {
        let y = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        assert!(tilt_separator(&[1.0, 0.0], &[0.0, 0.0], &y).is_err());
    }

    #[test]
    fn exact_projection_onto_box() {
        let body = ConvexBody::Poly(Polytope::cube(2, 1.0));
        let mut st = ProjectionState::new(2, 1.0, 0.0);
        for x in [[0.5, 0.2], [1.0, -1.0], [0.9, 0.9]] {
            let pb = st.project_online(&x, &body.project(&x), st.default_threshold());
            assert!(dist2(&pb, &x) < 1e-9);
        }
        assert_eq!(st.current_error(), 0.0);
    }

    #[test]
    fn exact_projection_onto_disk_is_returned() {
        let body = ConvexBody::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        let mut st = ProjectionState::new(2, 1.0, 0.0);
        let x = [1.0, 1.0];
        let pb = st.project_online(&x, &body.project(&x), 0.0);
        assert!(dist2(&pb, &body.project(&x)) < 1e-8);
    }

    #[test]
    fn noisy_disk_projection_audit() {
        let body = ConvexBody::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        let a = projection_harness(&body, 1.0, 1e-3, 40, 200, 7);
        assert!(a.max_excess <= 1e-9, "{a:?}");
        assert_eq!(a.containment_failures, 0);
        assert!(a.stability_error < 1e-6, "{a:?}");
    }

    #[test]
    fn robustify_subgradient_within_bound() {
        let inst = random_instance(&GeneratorSpec::standard(0, 2), 11);
        let r = robustify(&inst, RobustAlgo::Subgradient, Noise { eta_f: 5e-4, eta_g: 5e-4 }, 60, 0).unwrap();
        assert!(r.within_bound, "{} > {}", r.noisy.gap, r.bound);
        assert!(r.audit.ok(), "{:?}", r.audit);
    }

    #[test]
    fn robustify_centerpoint_within_bound() {
        let inst = random_instance(&GeneratorSpec::standard(1, 2), 4);
        let r = robustify(&inst, RobustAlgo::Centerpoint, Noise { eta_f: 5e-4, eta_g: 5e-4 }, 40, 0).unwrap();
        assert!(r.within_bound, "{} > {}", r.noisy.gap, r.bound);
        assert!(r.audit.ok(), "{:?}", r.audit);
    }
}
