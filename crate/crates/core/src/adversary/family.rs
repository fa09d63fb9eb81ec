use serde::{Deserialize, Serialize};

use super::AdversaryError;
use crate::instance::{fiber_minimum, AffinePiece, MaxAffineFunction, Polytope};
use crate::lp::lp_feasible;

/// A finite family of unconstrained continuous functions on `[−R, R]^d` with a
/// common optimal value and pairwise disjoint `ε`-argmin sets.
#[derive(Debug, Clone, PartialEq)]
pub struct HardFamily {
    pub d: usize,
    pub lipschitz: f64,
    pub radius: f64,
    pub eps: f64,
    pub opt: f64,
    pub members: Vec<MaxAffineFunction>,
}

/// On-disk description of a family: either generated (`k` grid centers) or an
/// explicit list of members given as `[a…, b]` piece rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub d: usize,
    #[serde(rename = "M")]
    pub lipschitz: f64,
    #[serde(rename = "R", default = "one")]
    pub radius: f64,
    pub eps: f64,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub members: Option<Vec<Vec<Vec<f64>>>>,
}

fn one() -> f64 {
    1.0
}

impl FamilySpec {
    pub fn build(&self) -> Result<HardFamily, AdversaryError> {
        match (&self.members, self.k) {
            (Some(rows), _) => {
                let members = rows
                    .iter()
                    .map(|r| MaxAffineFunction::from_rows(r))
                    .collect::<Result<Vec<_>, _>>()?;
                HardFamily::from_members(self.d, self.lipschitz, self.radius, self.eps, members)
            }
            (None, Some(k)) => ny_hard_family(self.d, self.lipschitz, self.radius, self.eps, k),
            (None, None) => Err(AdversaryError::Family("need either `k` or `members`".into())),
        }
    }
}

/// `{f ≤ opt_f + ε} ∩ {g ≤ opt_g + ε} ∩ [−R, R]^d` is nonempty.
pub fn eps_solutions_overlap(f: &MaxAffineFunction, fmin: f64, g: &MaxAffineFunction, gmin: f64, eps: f64, radius: f64) -> bool {
    let mut rows = Vec::new();
    for (h, m) in [(f, fmin), (g, gmin)] {
        for p in &h.pieces {
            rows.push((p.a.clone(), m + eps - p.b));
        }
    }
    lp_feasible(&rows, f.dim(), radius).is_some()
}

impl HardFamily {
    /// Validates a member list: common optimum and pairwise disjoint `ε`-solutions.
    pub fn from_members(
        d: usize,
        lipschitz: f64,
        radius: f64,
        eps: f64,
        members: Vec<MaxAffineFunction>,
    ) -> Result<Self, AdversaryError> {
        if d == 0 || members.is_empty() {
            return Err(AdversaryError::Family("empty family".into()));
        }
        if !(eps > 0.0 && lipschitz > 0.0 && radius > 0.0) {
            return Err(AdversaryError::Family("eps, M and R must be positive".into()));
        }
        let cube = Polytope::cube(d, radius);
        let bound = lipschitz * radius * (d as f64) + members.iter().flat_map(|f| f.pieces.iter()).map(|p| p.b.abs()).fold(0.0, f64::max);
        let mut mins = Vec::with_capacity(members.len());
        for (i, f) in members.iter().enumerate() {
            if f.dim() != d {
                return Err(AdversaryError::Family(format!("member {i} has dimension {}", f.dim())));
            }
            if f.lipschitz_on(0..d) > lipschitz + 1e-12 {
                return Err(AdversaryError::Family(format!("member {i} exceeds the Lipschitz bound")));
            }
            let (_, m) = fiber_minimum(f, &cube, &[], bound).ok_or_else(|| AdversaryError::Family("LP failure".into()))?;
            mins.push(m);
        }
        let opt = mins[0];
        if let Some(i) = mins.iter().position(|m| (m - opt).abs() > 1e-9) {
            return Err(AdversaryError::Family(format!("member {i} has optimum {} instead of {opt}", mins[i])));
        }
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                if eps_solutions_overlap(&members[i], opt, &members[j], opt, eps, radius) {
                    return Err(AdversaryError::Family(format!("members {i} and {j} share an eps-solution")));
                }
            }
        }
        Ok(Self { d, lipschitz, radius, eps, opt, members })
    }

    /// Every member stays within `opt + MR` on the box, as the tilted
    /// extensions require. Max-affine maxima over a box sit at vertices.
    pub fn check_extension_range(&self) -> Result<(), AdversaryError> {
        let cap = self.opt + self.lipschitz * self.radius + 1e-12;
        for (i, f) in self.members.iter().enumerate() {
            for k in 0..1usize << self.d {
                let v: Vec<f64> = (0..self.d).map(|j| if (k >> j) & 1 == 1 { self.radius } else { -self.radius }).collect();
                if f.eval(&v) > cap {
                    return Err(AdversaryError::Family(format!("member {i} exceeds opt + MR at a box vertex")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `f_c(y) = (M/2)·‖y − c‖∞` for `k` centers on the regular grid with
/// `⌈k^(1/d)⌉` cells per axis (first `k` in lexicographic order).
pub fn ny_hard_family(d: usize, lipschitz: f64, radius: f64, eps: f64, k: usize) -> Result<HardFamily, AdversaryError> {
    if d == 0 || k == 0 {
        return Err(AdversaryError::Family("need d ≥ 1 and k ≥ 1".into()));
    }
    let mut per = 1usize;
    while per.pow(d as u32) < k {
        per += 1;
    }
    let step = 2.0 * radius / per as f64;
    let slope = lipschitz / 2.0;
    let mut members = Vec::with_capacity(k);
    for idx in 0..k {
        let mut rest = idx;
        let mut center = vec![0.0; d];
        for j in (0..d).rev() {
            center[j] = -radius + step * (rest % per) as f64 + step / 2.0;
            rest /= per;
        }
        let mut pieces = Vec::with_capacity(2 * d);
        for (j, &c) in center.iter().enumerate() {
            for s in [1.0, -1.0] {
                let mut a = vec![0.0; d];
                a[j] = s * slope;
                pieces.push(AffinePiece { a, b: -s * slope * c });
            }
        }
        members.push(MaxAffineFunction::new(pieces)?);
    }
    HardFamily::from_members(d, lipschitz, radius, eps, members)
}
