use super::cont::ContAdversary;
use super::extension::{closest_fiber, fiber_index, fiber_slope, hereditary_transform, BitClass};
use super::family::HardFamily;
use super::AdversaryError;
use crate::instance::{Halfspace, Polytope};
use crate::linalg::dot;
use crate::oracle::{apply_form, validate, Oracle, OracleError, Query, Response, Target};

/// Mixed-integer resisting oracle: one continuous adversary per 0/1 fiber,
/// glued by tilted extensions. The feasible region is `[0,1]^n × [−R,R]^d`.
#[derive(Debug, Clone)]
pub struct MiAdversary {
    pub n: usize,
    pub d: usize,
    pub lipschitz: f64,
    pub radius: f64,
    pub opt: f64,
    pub eps: f64,
    pub fibers: Vec<ContAdversary>,
    pub domain: Polytope,
    pub bits: BitClass,
    /// Algorithm queries routed to each fiber.
    pub outer_queries: Vec<usize>,
}

/// `[0,1]^n × [−R,R]^d` inside the box of radius `max(R, 1)`.
pub fn mi_domain(n: usize, d: usize, radius: f64) -> Polytope {
    let box_r = radius.max(1.0);
    let mut c = Polytope::cube(n + d, box_r);
    for j in 0..n {
        let mut g = vec![0.0; n + d];
        g[j] = -1.0;
        c.halfspaces.push(Halfspace::new(g.clone(), 0.0).expect("unit normal"));
        if box_r > 1.0 {
            g[j] = 1.0;
            c.halfspaces.push(Halfspace::new(g, 1.0).expect("unit normal"));
        }
    }
    if radius < box_r {
        for j in n..n + d {
            for s in [1.0, -1.0] {
                let mut g = vec![0.0; n + d];
                g[j] = s;
                c.halfspaces.push(Halfspace::new(g, radius).expect("unit normal"));
            }
        }
    }
    c
}

impl MiAdversary {
    pub fn new(family: &HardFamily, n: usize, horizon: Option<usize>, bits: BitClass) -> Result<Self, AdversaryError> {
        if n == 0 {
            return Err(AdversaryError::Family("the mixed-integer adversary needs n ≥ 1".into()));
        }
        family.check_extension_range()?;
        Ok(Self {
            n,
            d: family.d,
            lipschitz: family.lipschitz,
            radius: family.radius,
            opt: family.opt,
            eps: family.eps,
            fibers: (0..1usize << n).map(|_| ContAdversary::new(family, horizon)).collect(),
            domain: mi_domain(n, family.d, family.radius),
            bits,
            outer_queries: vec![0; 1 << n],
        })
    }

    pub fn inner_queries(&self) -> Vec<usize> {
        self.fibers.iter().map(|f| f.inner_queries).collect()
    }
}

impl Oracle for MiAdversary {
    fn dim(&self) -> usize {
        self.n + self.d
    }

    fn answer(&mut self, q: &Query) -> Result<Response, OracleError> {
        validate(q, self.dim())?;
        let n = self.n;
        match q.target {
            Target::Sep => return Ok(apply_form(&q.form, &self.domain.separate(&q.point))),
            Target::Info => return Err(OracleError::Unsupported("composite queries".into())),
            Target::Val | Target::Sub => {}
        }
        let x = &q.point[..n];
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(OracleError::IllFormed("point outside [0,1]^n".into()));
        }
        let r = closest_fiber(x);
        let m_r = fiber_slope(&r, self.lipschitz, self.radius);
        let diff: Vec<f64> = x.iter().zip(&r).map(|(a, b)| a - *b as f64).collect();
        let delta = dot(&m_r, &diff);
        let idx = fiber_index(&r);
        self.outer_queries[idx] += 1;
        let y = q.point[n..].to_vec();
        let fiber = &mut self.fibers[idx];
        let trunc = fiber.respond(&Query::threshold(y, Target::Val, vec![1.0], self.opt - delta))?;
        if trunc == Response::Sign(-1) {
            let out = match q.target {
                Target::Val => vec![self.opt],
                _ => vec![0.0; n + self.d],
            };
            return Ok(apply_form(&q.form, &out));
        }
        let t = hereditary_transform(q, n, delta, &m_r, self.bits).map_err(|e| match e {
            AdversaryError::Oracle(o) => o,
            other => OracleError::Internal(other.to_string()),
        })?;
        match &t.inner {
            None => Ok(t.apply(None)),
            Some(inner) => {
                let resp = fiber.respond(inner)?;
                Ok(t.apply(Some(&resp)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::family::ny_hard_family;

    fn adv(n: usize) -> MiAdversary {
        MiAdversary::new(&ny_hard_family(1, 1.0, 1.0, 0.05, 8).unwrap(), n, Some(3), BitClass::Shifted).unwrap()
    }

    #[test]
    fn on_fiber_value_has_no_shift() {
        let mut a = adv(1);
        let r = a.answer(&Query::full(vec![0.0, -0.875], Target::Val)).unwrap();
        let v = r.as_scalar().unwrap();
        let members: Vec<f64> = a.fibers[0].members.iter().map(|m| m.f.eval(&[-0.875])).collect();
        assert!(members.iter().any(|m| (m - v).abs() < 1e-12));
        assert_eq!(a.fibers[0].inner_queries, 2);
    }

    #[test]
    fn far_off_fiber_is_truncated_after_one_query() {
        let mut a = adv(1);
        let r = a.answer(&Query::full(vec![0.45, 0.3], Target::Sub)).unwrap();
        assert_eq!(r, Response::Vector(vec![0.0, 0.0]));
        assert_eq!(a.inner_queries(), vec![1, 0]);
        let r = a.answer(&Query::full(vec![0.45, 0.3], Target::Val)).unwrap();
        assert_eq!(r, Response::Scalar(0.0));
    }

    #[test]
    fn inner_queries_per_round_at_most_two() {
        let mut a = adv(2);
        let mut before = 0;
        for k in 0..20 {
            let x0 = (k % 5) as f64 / 4.0;
            let q = Query::threshold(vec![x0, 1.0 - x0, 0.1 * k as f64 - 1.0], Target::Sub, vec![0.0, 0.0, 1.0], 0.0);
            a.answer(&q).unwrap();
            let total: usize = a.inner_queries().iter().sum();
            assert!(total - before <= 2);
            before = total;
        }
    }

    #[test]
    fn separation_uses_the_domain() {
        let mut a = adv(1);
        let r = a.answer(&Query::is_feasible(vec![-1.0, 0.0])).unwrap();
        assert_eq!(r, Response::Bool(false));
        let r = a.answer(&Query::is_feasible(vec![1.0, 0.0])).unwrap();
        assert_eq!(r, Response::Bool(true));
    }
}
