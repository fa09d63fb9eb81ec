//! Instances of the class `I_{n,d,R,ρ,M}`: max-affine objectives over polytopes inside
//! the `[−R, R]` box, their exact first-order charts, and brute-force reference solvers.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm1, norm2, norm_inf};
use crate::lp::{BoundedLp, LpOutcome};

/// Slack used when testing membership of floating-point points.
pub const FEAS_TOL: f64 = 1e-12;

/// Largest number of integer fibers the brute-force routines will enumerate.
pub const MAX_FIBERS: usize = 10_000;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("objective has no pieces")]
    EmptyObjective,
    #[error("halfspace normal is zero")]
    ZeroNormal,
    #[error("instance is infeasible")]
    Infeasible,
    #[error("{0} integer fibers exceed the enumeration limit")]
    TooManyFibers(usize),
    #[error("class violation: {0}")]
    ClassViolation(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A point of `Z^n × R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPoint {
    pub x: Vec<i64>,
    pub y: Vec<f64>,
}

impl MixedPoint {
    pub fn new(x: Vec<i64>, y: Vec<f64>) -> Self {
        Self { x, y }
    }

    pub fn dense(&self) -> Vec<f64> {
        self.x.iter().map(|&v| v as f64).chain(self.y.iter().copied()).collect()
    }

    /// Splits a dense point whose first `n` coordinates are integral.
    pub fn from_dense(z: &[f64], n: usize) -> Self {
        Self { x: z[..n].iter().map(|v| v.round() as i64).collect(), y: z[n..].to_vec() }
    }
}

/// `z ↦ ⟨a, z⟩ + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub a: Vec<f64>,
    pub b: f64,
}

impl AffinePiece {
    pub fn eval(&self, z: &[f64]) -> f64 {
        dot(&self.a, z) + self.b
    }
}

/// Pointwise maximum of affine pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxAffineFunction {
    pub pieces: Vec<AffinePiece>,
}

impl MaxAffineFunction {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self, InstanceError> {
        let Some(first) = pieces.first() else {
            return Err(InstanceError::EmptyObjective);
        };
        let dim = first.a.len();
        if let Some(p) = pieces.iter().find(|p| p.a.len() != dim) {
            return Err(InstanceError::DimensionMismatch { expected: dim, got: p.a.len() });
        }
        Ok(Self { pieces })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, InstanceError> {
        let pieces = rows
            .iter()
            .map(|r| {
                let (b, a) = r.split_last().ok_or(InstanceError::EmptyObjective)?;
                Ok(AffinePiece { a: a.to_vec(), b: *b })
            })
            .collect::<Result<Vec<_>, InstanceError>>()?;
        Self::new(pieces)
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].a.len()
    }

    fn check(&self, z: &[f64]) -> Result<(), InstanceError> {
        if z.len() != self.dim() {
            return Err(InstanceError::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        Ok(())
    }

    /// Value and index of the lowest-index active piece.
    pub fn eval_with_index(&self, z: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, p) in self.pieces.iter().enumerate() {
            let v = p.eval(z);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.eval_with_index(z).0
    }

    pub fn try_eval(&self, z: &[f64]) -> Result<f64, InstanceError> {
        self.check(z)?;
        Ok(self.eval(z))
    }

    /// Slope of the lowest-index piece attaining the maximum.
    pub fn subgradient(&self, z: &[f64]) -> Vec<f64> {
        self.pieces[self.eval_with_index(z).1].a.clone()
    }

    pub fn try_subgradient(&self, z: &[f64]) -> Result<Vec<f64>, InstanceError> {
        self.check(z)?;
        Ok(self.subgradient(z))
    }

    /// Indices of pieces within `tol` (relative) of the maximum at `z`.
    pub fn active_pieces(&self, z: &[f64], tol: f64) -> Vec<usize> {
        let v = self.eval(z);
        let t = tol * (1.0 + v.abs());
        self.pieces
            .iter()
            .enumerate()
            .filter(|(_, p)| p.eval(z) >= v - t)
            .map(|(i, _)| i)
            .collect()
    }

    /// Pointwise maximum of two functions on the same space.
    pub fn max_with(&self, other: &MaxAffineFunction) -> MaxAffineFunction {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        MaxAffineFunction { pieces }
    }

    /// `max_i ‖a_i‖₁` over the coordinates `range`.
    pub fn lipschitz_on(&self, range: std::ops::Range<usize>) -> f64 {
        self.pieces.iter().map(|p| norm1(&p.a[range.clone()])).fold(0.0, f64::max)
    }
}

/// `⟨normal, z⟩ ≤ offset` with a unit normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// Normalises `(g, c)` to a unit normal.
    pub fn new(g: Vec<f64>, c: f64) -> Result<Self, InstanceError> {
        let n = norm2(&g);
        if !(n > 1e-300) {
            return Err(InstanceError::ZeroNormal);
        }
        Ok(Self { normal: g.iter().map(|v| v / n).collect(), offset: c / n })
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        dot(&self.normal, z) <= self.offset + FEAS_TOL
    }

    pub fn violation(&self, z: &[f64]) -> f64 {
        dot(&self.normal, z) - self.offset
    }
}

/// `[−R, R]^dim ∩ ⋂ halfspaces`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    pub dim: usize,
    pub radius: f64,
    pub halfspaces: Vec<Halfspace>,
}

impl Polytope {
    pub fn cube(dim: usize, radius: f64) -> Self {
        Self { dim, radius, halfspaces: Vec::new() }
    }

    pub fn with(mut self, h: Halfspace) -> Self {
        self.halfspaces.push(h);
        self
    }

    pub fn in_box(&self, z: &[f64]) -> bool {
        z.iter().all(|v| v.abs() <= self.radius + FEAS_TOL)
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.in_box(z) && self.halfspaces.iter().all(|h| h.contains(z))
    }

    /// Exact separation: zero inside; otherwise the first violated box face (by
    /// coordinate, upper face before lower) or stored halfspace.
    pub fn separate(&self, z: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (i, v) in z.iter().enumerate() {
            if *v > self.radius + FEAS_TOL {
                g[i] = 1.0;
                return g;
            }
            if *v < -self.radius - FEAS_TOL {
                g[i] = -1.0;
                return g;
            }
        }
        match self.halfspaces.iter().find(|h| !h.contains(z)) {
            Some(h) => h.normal.clone(),
            None => g,
        }
    }

    pub fn try_separate(&self, z: &[f64]) -> Result<Vec<f64>, InstanceError> {
        if z.len() != self.dim {
            return Err(InstanceError::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        Ok(self.separate(z))
    }

    /// Constraints of the slice at integer assignment `x`, as rows over the last
    /// `dim − x.len()` coordinates (box faces excluded).
    pub fn fiber_rows(&self, x: &[f64]) -> Vec<(Vec<f64>, f64)> {
        let n = x.len();
        self.halfspaces
            .iter()
            .map(|h| (h.normal[n..].to_vec(), h.offset - dot(&h.normal[..n], x)))
            .collect()
    }
}

/// True iff `B_∞(z, r) ⊆ C`.
pub fn deep_point_check(c: &Polytope, z: &[f64], r: f64) -> bool {
    z.iter().all(|v| v.abs() + r <= c.radius + FEAS_TOL)
        && c.halfspaces.iter().all(|h| dot(&h.normal, z) + r * norm1(&h.normal) <= h.offset + FEAS_TOL)
}

/// A point `y` such that `(x, y)` is `r`-deep in `C`, if any.
pub fn deep_point_on_fiber(c: &Polytope, x: &[f64], r: f64) -> Option<Vec<f64>> {
    if x.iter().any(|v| v.abs() + r > c.radius + FEAS_TOL) {
        return None;
    }
    let n = x.len();
    let d = c.dim - n;
    let inner = c.radius - r;
    if inner < 0.0 {
        return None;
    }
    let mut lp = BoundedLp::with_box(vec![0.0; d], inner);
    for h in &c.halfspaces {
        lp.push(h.normal[n..].to_vec(), h.offset - r * norm1(&h.normal) - dot(&h.normal[..n], x));
    }
    match lp.minimize() {
        LpOutcome::Optimal { x, .. } => Some(x),
        LpOutcome::Infeasible => None,
    }
}

/// All integer points of `[−R, R]^n` in lexicographic order.
pub fn integer_fibers(n: usize, radius: f64) -> Result<Vec<Vec<i64>>, InstanceError> {
    let lo = (-radius).ceil() as i64;
    let hi = radius.floor() as i64;
    let per = (hi - lo + 1).max(0) as usize;
    let count = per.checked_pow(n as u32).unwrap_or(usize::MAX);
    if count > MAX_FIBERS {
        return Err(InstanceError::TooManyFibers(count));
    }
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * per);
        for p in &out {
            for v in lo..=hi {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    Ok(out)
}

/// Minimises `f` over the slice of `C` at integer assignment `x`.
pub fn fiber_minimum(
    f: &MaxAffineFunction,
    c: &Polytope,
    x: &[i64],
    value_bound: f64,
) -> Option<(Vec<f64>, f64)> {
    let n = x.len();
    let d = c.dim - n;
    let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    if xf.iter().any(|v| v.abs() > c.radius + FEAS_TOL) {
        return None;
    }
    if d == 0 {
        return c.contains(&xf).then(|| (Vec::new(), f.eval(&xf)));
    }
    let mut lower = vec![-c.radius; d + 1];
    let mut upper = vec![c.radius; d + 1];
    lower[d] = -value_bound - 1.0;
    upper[d] = value_bound + 1.0;
    let mut cost = vec![0.0; d + 1];
    cost[d] = 1.0;
    let mut lp = BoundedLp::new(cost, lower, upper);
    for p in &f.pieces {
        let mut row = p.a[n..].to_vec();
        row.push(-1.0);
        lp.push(row, -p.b - dot(&p.a[..n], &xf));
    }
    for (g, h) in c.fiber_rows(&xf) {
        let mut row = g;
        row.push(0.0);
        lp.push(row, h);
    }
    match lp.minimize() {
        LpOutcome::Optimal { x: sol, .. } => {
            let y = sol[..d].to_vec();
            let z: Vec<f64> = xf.iter().copied().chain(y.iter().copied()).collect();
            Some((y, f.eval(&z)))
        }
        LpOutcome::Infeasible => None,
    }
}

/// Class parameters `(n, d, R, ρ, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    pub rho: f64,
    #[serde(rename = "M")]
    pub lipschitz: f64,
}

impl ClassParams {
    pub fn dim(&self) -> usize {
        self.n + self.d
    }
}

/// First-order information produced by a chart at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FirstOrderInfo {
    Separation(Vec<f64>),
    Value(f64),
    Subgradient(Vec<f64>),
}

/// A mixed-integer convex instance `min f(z) s.t. z ∈ C ∩ (Z^n × R^d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub objective: MaxAffineFunction,
    pub feasible: Polytope,
    pub params: ClassParams,
    pub label: String,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    d: usize,
    #[serde(rename = "R")]
    radius: f64,
    rho: f64,
    #[serde(rename = "M")]
    lipschitz: f64,
    pieces: Vec<Vec<f64>>,
    #[serde(default)]
    halfspaces: Vec<Vec<f64>>,
    #[serde(default)]
    label: String,
}

/// Result of `brute_force_opt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub point: MixedPoint,
    pub value: f64,
}

impl Instance {
    pub fn new(
        objective: MaxAffineFunction,
        feasible: Polytope,
        params: ClassParams,
        label: impl Into<String>,
    ) -> Result<Self, InstanceError> {
        let dim = params.dim();
        if objective.dim() != dim {
            return Err(InstanceError::DimensionMismatch { expected: dim, got: objective.dim() });
        }
        if feasible.dim != dim {
            return Err(InstanceError::DimensionMismatch { expected: dim, got: feasible.dim });
        }
        if let Some(h) = feasible.halfspaces.iter().find(|h| h.normal.len() != dim) {
            return Err(InstanceError::DimensionMismatch { expected: dim, got: h.normal.len() });
        }
        Ok(Self { objective, feasible, params, label: label.into() })
    }

    pub fn unconstrained(
        objective: MaxAffineFunction,
        params: ClassParams,
        label: impl Into<String>,
    ) -> Result<Self, InstanceError> {
        let c = Polytope::cube(params.dim(), params.radius);
        Self::new(objective, c, params, label)
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let f: InstanceFile = serde_json::from_str(text)?;
        let params = ClassParams { n: f.n, d: f.d, radius: f.radius, rho: f.rho, lipschitz: f.lipschitz };
        let objective = MaxAffineFunction::from_rows(&f.pieces)?;
        let mut c = Polytope::cube(params.dim(), params.radius);
        for row in &f.halfspaces {
            let (off, g) = row.split_last().ok_or(InstanceError::ZeroNormal)?;
            c.halfspaces.push(Halfspace::new(g.to_vec(), *off)?);
        }
        Self::new(objective, c, params, f.label)
    }

    pub fn to_json(&self) -> String {
        let p = &self.params;
        let row = |a: &[f64], b: f64| a.iter().copied().chain(std::iter::once(b)).collect();
        let file = InstanceFile {
            n: p.n,
            d: p.d,
            radius: p.radius,
            rho: p.rho,
            lipschitz: p.lipschitz,
            pieces: self.objective.pieces.iter().map(|q| row(&q.a, q.b)).collect(),
            halfspaces: self.feasible.halfspaces.iter().map(|h| row(&h.normal, h.offset)).collect(),
            label: self.label.clone(),
        };
        serde_json::to_string_pretty(&file).expect("instance serialises")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.objective.eval(z)
    }

    /// The exact chart at `z`.
    pub fn separation(&self, z: &[f64]) -> FirstOrderInfo {
        FirstOrderInfo::Separation(self.feasible.separate(z))
    }

    pub fn value(&self, z: &[f64]) -> FirstOrderInfo {
        FirstOrderInfo::Value(self.objective.eval(z))
    }

    pub fn subgradient(&self, z: &[f64]) -> FirstOrderInfo {
        FirstOrderInfo::Subgradient(self.objective.subgradient(z))
    }

    /// `U = max_i (|b_i| + ‖a_i‖₁ R)`, a bound on `|f|` over the box.
    pub fn value_bound(&self) -> f64 {
        self.objective
            .pieces
            .iter()
            .map(|p| p.b.abs() + norm1(&p.a) * self.params.radius)
            .fold(0.0, f64::max)
    }

    /// `max_i ‖a_i‖∞`, a bound on the ℓ∞ norm of every chart subgradient.
    pub fn gradient_bound(&self) -> f64 {
        self.objective.pieces.iter().map(|p| norm_inf(&p.a)).fold(0.0, f64::max)
    }

    /// ℓ∞-Lipschitz constant of `f` restricted to any fiber.
    pub fn fiber_lipschitz(&self) -> f64 {
        self.objective.lipschitz_on(self.params.n..self.dim())
    }

    pub fn is_feasible_point(&self, p: &MixedPoint) -> bool {
        self.feasible.contains(&p.dense())
    }

    /// Exact optimum by enumerating every integer fiber and solving one LP per fiber.
    pub fn brute_force_opt(&self) -> Result<Optimum, InstanceError> {
        let u = self.value_bound();
        let mut best: Option<Optimum> = None;
        for x in integer_fibers(self.params.n, self.params.radius)? {
            if let Some((y, v)) = fiber_minimum(&self.objective, &self.feasible, &x, u) {
                if best.as_ref().is_none_or(|b| v < b.value - 1e-12) {
                    best = Some(Optimum { point: MixedPoint::new(x, y), value: v });
                }
            }
        }
        best.ok_or(InstanceError::Infeasible)
    }

    /// Checks Def. (i)–(iii) of the class: containment in the box holds by
    /// construction; the fiber Lipschitz bound and a ρ-deep point on an optimal
    /// fiber are verified.
    pub fn check_class(&self) -> Result<Optimum, InstanceError> {
        let lip = self.fiber_lipschitz();
        if lip > self.params.lipschitz + 1e-12 {
            return Err(InstanceError::ClassViolation(format!(
                "fiber Lipschitz constant {lip} exceeds M = {}",
                self.params.lipschitz
            )));
        }
        let opt = self.brute_force_opt()?;
        let x: Vec<f64> = opt.point.x.iter().map(|&v| v as f64).collect();
        if deep_point_on_fiber(&self.feasible, &x, self.params.rho).is_none() {
            return Err(InstanceError::ClassViolation(format!(
                "optimal fiber {:?} has no {}-deep point",
                opt.point.x, self.params.rho
            )));
        }
        Ok(opt)
    }

    /// Requirement of the bit and direction solvers: every slope bounded by `M` in ℓ∞.
    pub fn check_gradient_bound(&self) -> Result<(), InstanceError> {
        let g = self.gradient_bound();
        if g > self.params.lipschitz + 1e-12 {
            return Err(InstanceError::ClassViolation(format!(
                "slope ℓ∞ norm {g} exceeds M = {}",
                self.params.lipschitz
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(rows: &[&[f64]]) -> MaxAffineFunction {
        MaxAffineFunction::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn params(n: usize, d: usize) -> ClassParams {
        ClassParams { n, d, radius: 1.0, rho: 0.1, lipschitz: 2.0 }
    }

    #[test]
    fn eval_examples() {
        let g = f(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert_eq!(g.eval(&[0.3, 0.7]), 0.7);
        let h = f(&[&[1.0, 1.0, -1.0], &[0.0, 0.0, 0.0]]);
        assert_eq!(h.eval(&[0.0, 0.0]), 0.0);
        let k = f(&[&[2.0, 1.0], &[-1.0, 0.0]]);
        assert_eq!(k.eval(&[-1.0]), 1.0);
        assert!(g.try_eval(&[1.0]).is_err());
    }

    #[test]
    fn subgradient_examples() {
        let g = f(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert_eq!(g.subgradient(&[0.3, 0.7]), vec![0.0, 1.0]);
        assert_eq!(g.subgradient(&[0.5, 0.5]), vec![1.0, 0.0]);
        let k = f(&[&[2.0, 1.0], &[-1.0, 0.0]]);
        assert_eq!(k.subgradient(&[-1.0]), vec![-1.0]);
    }

    #[test]
    fn separation_examples() {
        let c = Polytope::cube(2, 1.0);
        assert_eq!(c.separate(&[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(c.separate(&[2.0, 0.0]), vec![1.0, 0.0]);
        let c = c.with(Halfspace::new(vec![1.0, 1.0], 0.0).unwrap());
        let g = c.separate(&[0.5, 0.5]);
        let s = 0.5f64.sqrt();
        assert!((g[0] - s).abs() < 1e-15 && (g[1] - s).abs() < 1e-15);
    }

    #[test]
    fn brute_force_examples() {
        let inst = Instance::unconstrained(f(&[&[1.0, 0.0], &[-1.0, 0.0]]), params(0, 1), "abs").unwrap();
        let opt = inst.brute_force_opt().unwrap();
        assert!(opt.value.abs() < 1e-9 && opt.point.y[0].abs() < 1e-9 && opt.point.x.is_empty());

        let inst =
            Instance::unconstrained(f(&[&[1.0, 1.0, 0.0], &[1.0, -1.0, 0.0]]), params(1, 1), "abs+x").unwrap();
        let opt = inst.brute_force_opt().unwrap();
        assert_eq!(opt.point.x, vec![-1]);
        assert!((opt.value + 1.0).abs() < 1e-9 && opt.point.y[0].abs() < 1e-9);
    }

    #[test]
    fn brute_force_infeasible_and_guard() {
        let c = Polytope::cube(1, 1.0).with(Halfspace::new(vec![1.0], -2.0).unwrap());
        let inst = Instance::new(f(&[&[1.0, 0.0]]), c, params(0, 1), "empty").unwrap();
        assert!(matches!(inst.brute_force_opt(), Err(InstanceError::Infeasible)));
        let p = ClassParams { n: 9, d: 1, radius: 2.0, rho: 0.1, lipschitz: 1.0 };
        let inst = Instance::unconstrained(f(&[&[0.0; 11]]), p, "big").unwrap();
        assert!(matches!(inst.brute_force_opt(), Err(InstanceError::TooManyFibers(_))));
    }

    #[test]
    fn deep_point_examples() {
        let c = Polytope::cube(2, 1.0);
        assert!(deep_point_check(&c, &[0.0, 0.0], 1.0));
        assert!(!deep_point_check(&c, &[0.0, 0.0], 1.01));
        let c = c.with(Halfspace::new(vec![1.0, 0.0], 0.0).unwrap());
        assert!(deep_point_check(&c, &[-0.5, 0.0], 0.4));
        assert!(!deep_point_check(&c, &[-0.5, 0.0], 0.6));
    }

    #[test]
    fn json_round_trip() {
        let c = Polytope::cube(2, 1.0).with(Halfspace::new(vec![3.0, 4.0], 1.0).unwrap());
        let inst = Instance::new(f(&[&[1.0, 0.5, 0.25]]), c, params(1, 1), "rt").unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back.label, "rt");
        assert!((back.feasible.halfspaces[0].normal[0] - 0.6).abs() < 1e-15);
        assert!((back.feasible.halfspaces[0].offset - 0.2).abs() < 1e-15);
        assert_eq!(back.objective, inst.objective);
    }
}
