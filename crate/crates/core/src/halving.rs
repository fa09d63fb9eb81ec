//! Finite-family solving with general binary queries: surviving-set halving
//! interleaved with exact-information replay into a full-oracle algorithm.

use serde::Serialize;
use thiserror::Error;

use crate::instance::{Instance, InstanceError, MixedPoint};
use crate::oracle::{
    bit_equal, chart_output, InstanceOracle, Oracle, OracleError, Predicate, Query, QueryCounter, Response, Session, Target,
};
use crate::solver::{CenterpointRun, Observation, OracleMode, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum HalvingError {
    #[error("empty family")]
    EmptyFamily,
    #[error("true instance index {0} outside the family")]
    UnknownTrue(usize),
    #[error("family members disagree on the class shape")]
    MixedShapes,
    #[error("wrapped algorithm used its budget of {0} without an answer")]
    Contract(usize),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Outcome of [`split_set`].
#[derive(Debug, Clone, PartialEq)]
pub enum Split {
    /// More than half of the members share this response.
    Majority { value: Vec<f64>, members: Vec<usize> },
    /// Response classes `a` hold the members `u1`; the rest are `u0`.
    Sets { a: Vec<Vec<f64>>, u0: Vec<usize>, u1: Vec<usize> },
}

/// Splits members (given with their responses) by response value. Without a
/// strict majority, classes are taken largest first whenever they keep `|U₁|`
/// at most `|U|/2`, which leaves `|U₁| ∈ [¼|U|, ½|U|]`.
pub fn split_set(members: &[usize], responses: &[Vec<f64>]) -> Split {
    let mut classes: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (&m, r) in members.iter().zip(responses) {
        match classes.iter_mut().find(|(v, _)| bit_equal(v, r)) {
            Some(c) => c.1.push(m),
            None => classes.push((r.clone(), vec![m])),
        }
    }
    let total = members.len();
    if let Some((v, ms)) = classes.iter().find(|(_, ms)| 2 * ms.len() > total) {
        return Split::Majority { value: v.clone(), members: ms.clone() };
    }
    classes.sort_by(|a, b| b.1.len().cmp(&a.1.len()));
    let mut a = Vec::new();
    let mut u1 = Vec::new();
    let mut u0 = Vec::new();
    for (v, ms) in classes {
        if 2 * (u1.len() + ms.len()) <= total {
            a.push(v);
            u1.extend(ms);
        } else {
            u0.extend(ms);
        }
    }
    u1.sort_unstable();
    u0.sort_unstable();
    Split::Sets { a, u0, u1 }
}

/// A full-information algorithm driven point by point.
pub trait WrappedAlgorithm {
    fn next_point(&mut self) -> Option<Vec<f64>>;
    /// Feeds the exact first-order record (`Info` target) at the last point.
    fn observe(&mut self, info: &[f64]);
    fn budget(&self) -> usize;
    /// The final answer from the information seen so far.
    fn answer(&self) -> Option<(Vec<f64>, f64)>;
}

/// The exact-mode centerpoint method as a wrapped algorithm.
#[derive(Debug, Clone)]
pub struct ExactCenterpoint {
    pub run: CenterpointRun,
}

impl ExactCenterpoint {
    pub fn new(inst: &Instance, eps: f64, samples: usize, seed: u64) -> Result<Self, SolverError> {
        let config = SolverConfig::new(eps, OracleMode::Exact).with_samples(samples).with_seed(seed);
        Ok(Self { run: CenterpointRun::new(inst.params, config)? })
    }
}

impl WrappedAlgorithm for ExactCenterpoint {
    fn next_point(&mut self) -> Option<Vec<f64>> {
        self.run.next_point()
    }

    fn observe(&mut self, info: &[f64]) {
        let dim = self.run.params.dim();
        let obs = if info.len() == dim {
            Observation::Infeasible { normal: info.to_vec() }
        } else {
            Observation::Feasible { value: Some(info[0]), cut: info[1..].to_vec() }
        };
        self.run.observe(obs);
    }

    fn budget(&self) -> usize {
        self.run.budget
    }

    fn answer(&self) -> Option<(Vec<f64>, f64)> {
        self.run
            .feasible
            .iter()
            .filter_map(|(z, v)| v.map(|v| (z.clone(), v)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Summary of a halving solve.
#[derive(Debug, Clone, Serialize)]
pub struct HalvingReport {
    pub solution: MixedPoint,
    pub value: f64,
    pub true_optimum: f64,
    pub gap: f64,
    pub eps: f64,
    pub family_size: usize,
    pub budget: usize,
    pub binary_queries: u64,
    pub query_bound: f64,
    pub identified: bool,
    pub rounds: usize,
    /// Survivor count after every update.
    pub sizes: Vec<usize>,
    /// The true instance stayed in the surviving set throughout.
    pub retained: bool,
    /// `(point, exact record)` pairs replayed into the wrapped algorithm.
    pub replayed: Vec<(Vec<f64>, Vec<f64>)>,
    pub per_kind: QueryCounter,
}

/// `2·(log_{4/3}|I| + u)`.
pub fn halving_bound(family_size: usize, budget: usize) -> f64 {
    2.0 * ((family_size as f64).ln() / (4.0f64 / 3.0).ln() + budget as f64)
}

/// Solves the hidden instance `family[truth]` with binary queries only.
pub fn halving_solve(
    family: &[Instance],
    truth: usize,
    wrapped: &mut dyn WrappedAlgorithm,
    eps: f64,
) -> Result<HalvingReport, HalvingError> {
    let first = family.first().ok_or(HalvingError::EmptyFamily)?;
    if truth >= family.len() {
        return Err(HalvingError::UnknownTrue(truth));
    }
    if family.iter().any(|i| i.params.n != first.params.n || i.params.d != first.params.d) {
        return Err(HalvingError::MixedShapes);
    }
    let hidden = &family[truth];
    let mut oracle = Session::new(InstanceOracle::new(hidden));
    let u = wrapped.budget();
    let mut alive: Vec<usize> = (0..family.len()).collect();
    let mut sizes = vec![alive.len()];
    let mut retained = true;
    let mut replayed: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut rounds = 0;
    let bool_of = |r: Response| r.as_bool().ok_or_else(|| OracleError::Internal(format!("expected a bit, got {r:?}")));
    let (solution, identified) = loop {
        if alive.len() == 1 {
            let opt = family[alive[0]].brute_force_opt()?;
            break (opt.point.dense(), true);
        }
        let next = if replayed.len() >= u { None } else { wrapped.next_point() };
        let Some(z) = next else {
            let (z, _) = wrapped.answer().ok_or(HalvingError::Contract(u))?;
            break (z, false);
        };
        rounds += 1;
        let feasible = bool_of(oracle.answer(&Query::is_feasible(z.clone()))?)?;
        alive.retain(|&i| family[i].feasible.separate(&z).iter().all(|v| *v == 0.0) == feasible);
        retained &= alive.contains(&truth);
        sizes.push(alive.len());
        if alive.len() <= 1 {
            continue;
        }
        let responses: Vec<Vec<f64>> = alive.iter().map(|&i| chart_output(&family[i], &z, Target::Info)).collect();
        match split_set(&alive, &responses) {
            Split::Sets { a, u0, u1 } => {
                let q = Query::binary(z.clone(), Target::Info, Predicate::in_set("response_class", a));
                alive = if bool_of(oracle.answer(&q)?)? { u1 } else { u0 };
            }
            Split::Majority { value, members } => {
                let q = Query::binary(z.clone(), Target::Info, Predicate::in_set("response_equals", vec![value.clone()]));
                if bool_of(oracle.answer(&q)?)? {
                    alive = members;
                    wrapped.observe(&value);
                    replayed.push((z, value));
                } else {
                    alive.retain(|i| !members.contains(i));
                }
            }
        }
        retained &= alive.contains(&truth);
        sizes.push(alive.len());
    };
    let value = hidden.eval(&solution);
    let true_optimum = hidden.brute_force_opt()?.value;
    let counter = oracle.counter;
    Ok(HalvingReport {
        solution: MixedPoint::from_dense(&solution, hidden.params.n),
        value,
        true_optimum,
        gap: value - true_optimum,
        eps,
        family_size: family.len(),
        budget: u,
        binary_queries: counter.binary,
        query_bound: halving_bound(family.len(), u),
        identified,
        rounds,
        sizes,
        retained,
        replayed,
        per_kind: counter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::{random_instance, GeneratorSpec};

    fn ids(v: &[usize]) -> Vec<usize> {
        v.to_vec()
    }

    #[test]
    fn four_distinct_responses() {
        let r: Vec<Vec<f64>> = (0..4).map(|k| vec![k as f64]).collect();
        let Split::Sets { u1, u0, .. } = split_set(&ids(&[0, 1, 2, 3]), &r) else { panic!() };
        assert_eq!(u1.len(), 2);
        assert_eq!(u0.len(), 2);
    }

    #[test]
    fn three_of_four_is_a_majority() {
        let r = vec![vec![1.0], vec![1.0], vec![2.0], vec![1.0]];
        assert_eq!(split_set(&ids(&[0, 1, 2, 3]), &r), Split::Majority { value: vec![1.0], members: vec![0, 1, 3] });
    }

    #[test]
    fn classes_three_three_two() {
        let r: Vec<Vec<f64>> = [0, 0, 0, 1, 1, 1, 2, 2].iter().map(|&k| vec![k as f64]).collect();
        let Split::Sets { a, u1, .. } = split_set(&ids(&[0, 1, 2, 3, 4, 5, 6, 7]), &r) else { panic!() };
        assert_eq!(a, vec![vec![0.0]]);
        assert_eq!(u1, vec![0, 1, 2]);
    }

    #[test]
    fn singleton_family_needs_no_queries() {
        let inst = random_instance(&GeneratorSpec::standard(1, 1), 5);
        let mut w = ExactCenterpoint::new(&inst, 0.05, 2000, 0).unwrap();
        let r = halving_solve(std::slice::from_ref(&inst), 0, &mut w, 0.05).unwrap();
        assert_eq!(r.binary_queries, 0);
        assert!(r.gap.abs() < 1e-9);
    }

    #[test]
    fn identical_members_replay_exact_information() {
        let inst = random_instance(&GeneratorSpec::standard(0, 2), 9);
        let family = vec![inst.clone(), inst.clone(), inst.clone()];
        let mut w = ExactCenterpoint::new(&inst, 0.05, 4000, 0).unwrap();
        let r = halving_solve(&family, 1, &mut w, 0.05).unwrap();
        assert!(!r.identified);
        assert!(r.gap <= 0.05);
        for (z, h) in &r.replayed {
            assert!(bit_equal(h, &chart_output(&inst, z, Target::Info)));
        }
        assert!((r.binary_queries as f64) <= r.query_bound);
    }
}
