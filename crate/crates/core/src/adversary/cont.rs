use std::cmp::Ordering;

use super::consistency::{consistent_at, member_response, Record};
use super::family::HardFamily;
use crate::instance::{fiber_minimum, MaxAffineFunction, Polytope};
use crate::oracle::{bit_equal, validate, FormRecord, OracleError, Query, Response, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberKind {
    Base(usize),
    /// Pointwise maximum of the base survivors at the commit step.
    Commit,
}

#[derive(Debug, Clone)]
pub struct Member {
    pub f: MaxAffineFunction,
    pub kind: MemberKind,
    pub min_value: f64,
}

#[derive(Debug, Clone)]
struct PointLog {
    y: Vec<f64>,
    records: Vec<Record>,
}

/// Resisting oracle over a registered continuous family. Before the horizon it
/// answers by majority vote of the base survivors (ties: lexicographically
/// smallest response); at the horizon it commits to the maximum of the base
/// survivors and answers from it afterwards.
#[derive(Debug, Clone)]
pub struct ContAdversary {
    pub d: usize,
    pub eps: f64,
    pub radius: f64,
    pub lipschitz: f64,
    pub opt: f64,
    pub members: Vec<Member>,
    pub alive: Vec<bool>,
    pub horizon: Option<usize>,
    pub inner_queries: usize,
    pub committed: Option<usize>,
    log: Vec<PointLog>,
}

fn lex_min_by_count(cands: Vec<(Response, usize)>) -> Option<Response> {
    cands
        .into_iter()
        .max_by(|(ra, ca), (rb, cb)| match ca.cmp(cb) {
            Ordering::Equal => rb.lex_cmp(ra),
            o => o,
        })
        .map(|(r, _)| r)
}

impl ContAdversary {
    pub fn new(family: &HardFamily, horizon: Option<usize>) -> Self {
        let members: Vec<Member> = family
            .members
            .iter()
            .enumerate()
            .map(|(i, f)| Member { f: f.clone(), kind: MemberKind::Base(i), min_value: family.opt })
            .collect();
        let alive = vec![true; members.len()];
        Self {
            d: family.d,
            eps: family.eps,
            radius: family.radius,
            lipschitz: family.lipschitz,
            opt: family.opt,
            members,
            alive,
            horizon,
            inner_queries: 0,
            committed: None,
            log: Vec::new(),
        }
    }

    /// Indices of members consistent with the full transcript.
    pub fn survivors(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&i| self.alive[i]).collect()
    }

    fn base_survivors(&self) -> Vec<usize> {
        self.survivors().into_iter().filter(|&i| matches!(self.members[i].kind, MemberKind::Base(_))).collect()
    }

    fn log_at(&self, y: &[f64]) -> Option<usize> {
        self.log.iter().position(|p| bit_equal(&p.y, y))
    }

    fn records_at(&self, y: &[f64]) -> Vec<&Record> {
        self.log_at(y).map(|i| self.log[i].records.iter().collect()).unwrap_or_default()
    }

    /// Whether `f` reproduces every logged answer.
    pub fn is_consistent(&self, f: &MaxAffineFunction) -> bool {
        self.log.iter().all(|p| consistent_at(f, &p.y, &p.records.iter().collect::<Vec<_>>()))
    }

    /// Number of logged query points.
    pub fn points(&self) -> usize {
        self.log.len()
    }

    fn commit(&mut self) -> Result<usize, OracleError> {
        let base = self.base_survivors();
        if base.len() < 2 {
            return Err(OracleError::Internal(format!("{} base survivor(s) at the commit step", base.len())));
        }
        let mut f = self.members[base[0]].f.clone();
        for &i in &base[1..] {
            f = f.max_with(&self.members[i].f);
        }
        let bound = self.opt.abs() + 4.0 * self.radius * f.lipschitz_on(0..self.d) + 1.0;
        let (_, min_value) = fiber_minimum(&f, &Polytope::cube(self.d, self.radius), &[], bound)
            .ok_or_else(|| OracleError::Internal("commit LP failed".into()))?;
        if min_value <= self.opt + self.eps {
            return Err(OracleError::Internal("committed maximum has an eps-solution".into()));
        }
        if !self.is_consistent(&f) {
            return Err(OracleError::Internal("committed maximum contradicts the transcript".into()));
        }
        self.members.push(Member { f, kind: MemberKind::Commit, min_value });
        self.alive.push(true);
        Ok(self.members.len() - 1)
    }

    /// Answers a value or subgradient query at `y`.
    pub fn respond(&mut self, q: &Query) -> Result<Response, OracleError> {
        validate(q, self.d)?;
        if !matches!(q.target, Target::Val | Target::Sub) {
            return Err(OracleError::Unsupported(format!("{:?} queries on an unconstrained fiber", q.target)));
        }
        let y = q.point.as_slice();
        let key = FormRecord::from(&q.form);
        if let Some(p) = self.log_at(y) {
            if let Some(r) = self.log[p].records.iter().find(|r| r.target == q.target && FormRecord::from(&r.form) == key) {
                let resp = r.response.clone();
                self.inner_queries += 1;
                return Ok(resp);
            }
        }
        let index = self.inner_queries + 1;
        if self.committed.is_none() && self.horizon.is_some_and(|h| index >= h) {
            self.committed = Some(self.commit()?);
        }
        let prior = self.records_at(y);
        let response = match self.committed {
            Some(c) => member_response(&self.members[c].f, y, q.target, &q.form, &prior)
                .ok_or_else(|| OracleError::Internal("committed function has no consistent answer".into()))?,
            None => {
                let base = self.base_survivors();
                let mut cands: Vec<(Response, usize)> = Vec::new();
                for &i in &base {
                    let Some(r) = member_response(&self.members[i].f, y, q.target, &q.form, &prior) else { continue };
                    if cands.iter().any(|(c, _)| c.same(&r)) {
                        continue;
                    }
                    let rec = Record { target: q.target, form: q.form.clone(), response: r.clone() };
                    let mut with: Vec<&Record> = prior.clone();
                    with.push(&rec);
                    let count = base.iter().filter(|&&j| consistent_at(&self.members[j].f, y, &with)).count();
                    cands.push((r, count));
                }
                lex_min_by_count(cands).ok_or_else(|| OracleError::Internal("no survivor can answer".into()))?
            }
        };
        let rec = Record { target: q.target, form: q.form.clone(), response: response.clone() };
        let p = match self.log_at(y) {
            Some(p) => p,
            None => {
                self.log.push(PointLog { y: y.to_vec(), records: Vec::new() });
                self.log.len() - 1
            }
        };
        self.log[p].records.push(rec);
        let recs: Vec<&Record> = self.log[p].records.iter().collect();
        let keep: Vec<bool> = (0..self.members.len())
            .map(|i| self.alive[i] && consistent_at(&self.members[i].f, y, &recs))
            .collect();
        self.alive = keep;
        if !self.alive.iter().any(|a| *a) {
            return Err(OracleError::Internal("surviving set emptied".into()));
        }
        self.inner_queries = index;
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::family::ny_hard_family;

    fn pair() -> HardFamily {
        let (m, eps) = (1.0, 0.05);
        let c = 2.0 * eps / m + eps;
        let f = MaxAffineFunction::from_rows(&[vec![m, -m * c], vec![-m, m * c]]).unwrap();
        let g = MaxAffineFunction::from_rows(&[vec![m, m * c], vec![-m, -m * c]]).unwrap();
        HardFamily::from_members(1, m, 1.0, eps, vec![f, g]).unwrap()
    }

    #[test]
    fn value_at_zero_prunes_nothing() {
        let mut adv = ContAdversary::new(&pair(), None);
        let r = adv.respond(&Query::full(vec![0.0], Target::Val)).unwrap();
        assert!((r.as_scalar().unwrap() - 0.15).abs() < 1e-12);
        assert_eq!(adv.survivors().len(), 2);
    }

    #[test]
    fn commit_has_large_minimum_and_replays() {
        let mut adv = ContAdversary::new(&pair(), Some(1));
        let q = Query::threshold(vec![0.5], Target::Sub, vec![1.0], 0.0);
        let r1 = adv.respond(&q).unwrap();
        let c = adv.committed.unwrap();
        assert!(adv.members[c].min_value > adv.opt + adv.eps);
        let r2 = adv.respond(&q).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn majority_halves_at_worst() {
        let fam = ny_hard_family(1, 1.0, 1.0, 0.05, 8).unwrap();
        let mut adv = ContAdversary::new(&fam, None);
        let mut alive = 8;
        for y in [0.0, 0.5, 0.75] {
            adv.respond(&Query::threshold(vec![y], Target::Sub, vec![1.0], 0.0)).unwrap();
            let now = adv.survivors().len();
            assert!(2 * now >= alive);
            alive = now;
        }
        for i in adv.survivors() {
            assert!(adv.is_consistent(&adv.members[i].f));
        }
    }
}
