//! Dense two-phase simplex with Bland's rule.
//!
//! Problems are tiny (a handful of variables, at most a few thousand rows), so a
//! dense tableau is adequate. Problems with many more rows than variables are
//! solved through their dual, which keeps the tableau at `vars + 1` rows.

use crate::linalg::{dot, solve_square};

/// Pivoting and feasibility tolerance.
pub const LP_TOL: f64 = 1e-9;

const MAX_PIVOTS: usize = 200_000;

/// Outcome of `min cᵀx s.t. Ax = b, x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum StandardOutcome {
    Optimal { x: Vec<f64>, basis: Vec<usize> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&prow) {
                        *v -= f * pv;
                    }
                    row[c] = 0.0;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs Bland-rule pivots over columns `< eligible`. Returns `false` if unbounded.
    fn optimize(&mut self, eligible: usize) -> Option<bool> {
        for _ in 0..MAX_PIVOTS {
            let Some(c) = (0..eligible).find(|&j| self.obj[j] < -LP_TOL) else {
                return Some(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > LP_TOL {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - LP_TOL
                                || (ratio <= br + LP_TOL && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    }
                }
            }
            match best {
                None => return Some(false),
                Some((r, _)) => self.pivot(r, c),
            }
        }
        None
    }
}

/// Solves `min cᵀx s.t. Ax = b, x ≥ 0` with a phase-1 artificial basis.
pub fn solve_standard(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> StandardOutcome {
    let m = b.len();
    let k = c.len();
    let width = k + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sgn = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width + 1];
        for j in 0..k {
            row[j] = sgn * a[i][j];
        }
        row[k + i] = 1.0;
        row[width] = sgn * b[i];
        rows.push(row);
    }
    let mut obj = vec![0.0; width + 1];
    for row in &rows {
        for j in 0..k {
            obj[j] -= row[j];
        }
        obj[width] -= row[width];
    }
    let mut t = Tableau { rows, obj, basis: (k..k + m).collect(), width };
    if t.optimize(width) != Some(true) {
        return StandardOutcome::Infeasible;
    }
    let scale = 1.0 + b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if -t.obj[width] > LP_TOL * scale * (m as f64).max(1.0) {
        return StandardOutcome::Infeasible;
    }
    for i in 0..m {
        if t.basis[i] >= k {
            if let Some(j) = (0..k).find(|&j| t.rows[i][j].abs() > LP_TOL) {
                t.pivot(i, j);
            }
        }
    }
    let mut obj = vec![0.0; width + 1];
    obj[..k].copy_from_slice(c);
    for i in 0..m {
        let bj = t.basis[i];
        let cb = if bj < k { c[bj] } else { 0.0 };
        if cb != 0.0 {
            for (v, tv) in obj.iter_mut().zip(&t.rows[i]) {
                *v -= cb * tv;
            }
        }
    }
    for i in 0..m {
        if t.basis[i] < k {
            obj[t.basis[i]] = 0.0;
        }
    }
    t.obj = obj;
    match t.optimize(k) {
        Some(true) => {}
        Some(false) => return StandardOutcome::Unbounded,
        None => return StandardOutcome::Infeasible,
    }
    let mut x = vec![0.0; k];
    for i in 0..m {
        if t.basis[i] < k {
            x[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    StandardOutcome::Optimal { x, basis: t.basis }
}

/// `min cᵀx s.t. ⟨row, x⟩ ≤ rhs` for every row, `lower ≤ x ≤ upper` (all finite).
#[derive(Debug, Clone)]
pub struct BoundedLp {
    pub c: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
}

impl BoundedLp {
    pub fn new(c: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { c, rows: Vec::new(), lower, upper }
    }

    pub fn with_box(c: Vec<f64>, radius: f64) -> Self {
        let n = c.len();
        Self::new(c, vec![-radius; n], vec![radius; n])
    }

    pub fn push(&mut self, row: Vec<f64>, rhs: f64) {
        self.rows.push((row, rhs));
    }

    pub fn minimize(&self) -> LpOutcome {
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > &(u + LP_TOL)) {
            return LpOutcome::Infeasible;
        }
        if self.rows.len() > 3 * self.c.len() + 4 {
            if let Some(out) = self.minimize_dual() {
                return out;
            }
        }
        self.minimize_primal()
    }

    fn minimize_primal(&self) -> LpOutcome {
        let nv = self.c.len();
        let mr = self.rows.len();
        let m = mr + nv;
        let k = nv + m;
        let mut a = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for (i, (row, rhs)) in self.rows.iter().enumerate() {
            let mut r = vec![0.0; k];
            r[..nv].copy_from_slice(row);
            r[nv + i] = 1.0;
            a.push(r);
            b.push(rhs - dot(row, &self.lower));
        }
        for j in 0..nv {
            let mut r = vec![0.0; k];
            r[j] = 1.0;
            r[nv + mr + j] = 1.0;
            a.push(r);
            b.push(self.upper[j] - self.lower[j]);
        }
        let mut c = vec![0.0; k];
        c[..nv].copy_from_slice(&self.c);
        match solve_standard(&c, &a, &b) {
            StandardOutcome::Optimal { x, .. } => {
                let x: Vec<f64> = (0..nv)
                    .map(|j| (x[j] + self.lower[j]).clamp(self.lower[j], self.upper[j]))
                    .collect();
                let value = dot(&self.c, &x);
                LpOutcome::Optimal { x, value }
            }
            _ => LpOutcome::Infeasible,
        }
    }

    /// Solves the dual `min hᵀλ s.t. Gᵀλ = −c, λ ≥ 0`, whose tableau has one row per
    /// variable, and reads the primal vertex off the optimal basis.
    fn minimize_dual(&self) -> Option<LpOutcome> {
        let nv = self.c.len();
        let mut g: Vec<&[f64]> = Vec::new();
        let mut h: Vec<f64> = Vec::new();
        let mut unit = Vec::with_capacity(2 * nv);
        for j in 0..nv {
            let mut e = vec![0.0; nv];
            e[j] = 1.0;
            unit.push((e.clone(), self.upper[j]));
            e[j] = -1.0;
            unit.push((e, -self.lower[j]));
        }
        for (row, rhs) in unit.iter().chain(self.rows.iter()) {
            g.push(row);
            h.push(*rhs);
        }
        let m = g.len();
        let a: Vec<Vec<f64>> = (0..nv).map(|i| (0..m).map(|j| g[j][i]).collect()).collect();
        let r: Vec<f64> = self.c.iter().map(|v| -v).collect();
        match solve_standard(&h, &a, &r) {
            StandardOutcome::Unbounded => Some(LpOutcome::Infeasible),
            StandardOutcome::Infeasible => None,
            StandardOutcome::Optimal { basis, .. } => {
                if basis.iter().any(|&j| j >= m) {
                    return None;
                }
                let sys: Vec<Vec<f64>> = basis.iter().map(|&j| g[j].to_vec()).collect();
                let rhs: Vec<f64> = basis.iter().map(|&j| h[j]).collect();
                let y = solve_square(&sys, &rhs)?;
                let ok = g.iter().zip(&h).all(|(row, hv)| dot(row, &y) <= hv + 1e-7 * (1.0 + hv.abs()));
                if !ok {
                    return None;
                }
                let x: Vec<f64> =
                    (0..nv).map(|j| y[j].clamp(self.lower[j], self.upper[j])).collect();
                let value = dot(&self.c, &x);
                Some(LpOutcome::Optimal { x, value })
            }
        }
    }
}

/// Returns a point of `{y : ⟨g, y⟩ ≤ c for all (g, c)} ∩ [−R, R]^d`, if any.
pub fn lp_feasible(constraints: &[(Vec<f64>, f64)], dim: usize, radius: f64) -> Option<Vec<f64>> {
    let mut lp = BoundedLp::with_box(vec![0.0; dim], radius);
    lp.rows = constraints.to_vec();
    match lp.minimize() {
        LpOutcome::Optimal { x, .. } => Some(x),
        LpOutcome::Infeasible => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn satisfies(cons: &[(Vec<f64>, f64)], y: &[f64], r: f64) -> bool {
        y.iter().all(|v| v.abs() <= r + 1e-9) && cons.iter().all(|(g, c)| dot(g, y) <= c + 1e-9)
    }

    #[test]
    fn feasible_interval() {
        let cons = vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)];
        let y = lp_feasible(&cons, 1, 1.0).unwrap();
        assert!(satisfies(&cons, &y, 1.0));
    }

    #[test]
    fn empty_region() {
        assert!(lp_feasible(&[(vec![1.0], -2.0)], 1, 1.0).is_none());
    }

    #[test]
    fn coupled_constraints() {
        let cons = vec![(vec![1.0, 1.0], 0.0), (vec![-1.0, 0.0], -0.5)];
        let y = lp_feasible(&cons, 2, 1.0).unwrap();
        assert!(y[0] >= 0.5 - 1e-9 && y[1] <= -0.5 + 1e-9);
    }

    #[test]
    fn minimizes_max_of_affine() {
        // min t s.t. t ≥ y, t ≥ −y on [−1, 1]
        let mut lp = BoundedLp::new(vec![0.0, 1.0], vec![-1.0, -5.0], vec![1.0, 5.0]);
        lp.push(vec![1.0, -1.0], 0.0);
        lp.push(vec![-1.0, -1.0], 0.0);
        match lp.minimize() {
            LpOutcome::Optimal { x, value } => {
                assert!(value.abs() < 1e-9 && x[0].abs() < 1e-9);
            }
            _ => panic!("expected optimum"),
        }
    }

    #[test]
    fn dual_path_matches_primal() {
        let mut lp = BoundedLp::with_box(vec![1.0, -2.0], 1.0);
        for k in 0..40 {
            let th = k as f64 * 0.157;
            lp.push(vec![th.cos(), th.sin()], 0.8);
        }
        let d = lp.minimize_dual().unwrap();
        let p = lp.minimize_primal();
        match (d, p) {
            (LpOutcome::Optimal { value: a, .. }, LpOutcome::Optimal { value: b, .. }) => {
                assert!((a - b).abs() < 1e-7, "{a} vs {b}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_rows_terminate() {
        let mut lp = BoundedLp::with_box(vec![-1.0, -1.0], 1.0);
        for _ in 0..5 {
            lp.push(vec![1.0, 1.0], 1.0);
            lp.push(vec![1.0, 0.0], 0.5);
        }
        match lp.minimize() {
            LpOutcome::Optimal { value, .. } => assert!((value + 1.0).abs() < 1e-9),
            _ => panic!(),
        }
    }
}
