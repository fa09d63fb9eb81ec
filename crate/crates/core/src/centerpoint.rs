//! Version polytopes and sampled approximate mixed-integer centerpoints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{integer_fibers, Halfspace, InstanceError, Polytope, FEAS_TOL};
use crate::linalg::{dot, normalized};
use crate::lp::{BoundedLp, LpOutcome};

/// Number of random directions used to score candidates.
pub const SCORE_DIRECTIONS: usize = 64;

/// Widths below this (times `R`) count as a collapsed slice.
const COLLAPSE_WIDTH: f64 = 1e-9;

/// `[−R, R]^{n+d}` intersected with accumulated cuts, plus the fibers still known
/// to meet it.
#[derive(Debug, Clone, PartialEq)]
pub struct VersionPolytope {
    pub base: Polytope,
    pub n: usize,
    pub fibers: Vec<Vec<i64>>,
}

impl VersionPolytope {
    pub fn new(n: usize, d: usize, radius: f64) -> Result<Self, InstanceError> {
        Ok(Self { base: Polytope::cube(n + d, radius), n, fibers: integer_fibers(n, radius)? })
    }

    pub fn from_polytope(base: Polytope, n: usize) -> Result<Self, InstanceError> {
        let fibers = integer_fibers(n, base.radius)?;
        Ok(Self { base, n, fibers })
    }

    pub fn d(&self) -> usize {
        self.base.dim - self.n
    }

    /// Adds `⟨g, z⟩ ≤ ⟨g, at⟩`; zero normals are ignored.
    pub fn cut_through(&mut self, g: &[f64], at: &[f64]) -> bool {
        match Halfspace::new(g.to_vec(), dot(g, at)) {
            Ok(h) => {
                self.base.halfspaces.push(h);
                true
            }
            Err(_) => false,
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        self.base.contains(z)
    }

    /// Drops fibers whose slices were found empty.
    pub fn retain_fibers(&mut self, keep: &[bool]) {
        let mut i = 0;
        self.fibers.retain(|_| {
            i += 1;
            keep[i - 1]
        });
    }
}

/// Bounding box and LP extreme points of one fiber slice.
#[derive(Debug, Clone)]
pub struct SliceBox {
    pub x: Vec<i64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub extremes: Vec<Vec<f64>>,
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl SliceBox {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l).max(0.0)).product()
    }

    pub fn collapsed(&self, radius: f64) -> bool {
        self.lo.iter().zip(&self.hi).all(|(l, h)| h - l < COLLAPSE_WIDTH * radius)
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.rows.iter().all(|(g, h)| dot(g, y) <= h + FEAS_TOL)
    }
}

/// Computes the bounding box of `P`'s slice at `x` with `2d` LPs, keeping only the
/// rows that can be active inside it. `None` if the slice is empty.
pub fn slice_box(p: &VersionPolytope, x: &[i64]) -> Option<SliceBox> {
    let d = p.d();
    let r = p.base.radius;
    let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let rows = p.base.fiber_rows(&xf);
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    let mut extremes = Vec::with_capacity(2 * d);
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut c = vec![0.0; d];
            c[i] = s;
            let mut lp = BoundedLp::with_box(c, r);
            lp.rows = rows.clone();
            match lp.minimize() {
                LpOutcome::Optimal { x: y, .. } => {
                    if s > 0.0 {
                        lo[i] = y[i];
                    } else {
                        hi[i] = y[i];
                    }
                    extremes.push(y);
                }
                LpOutcome::Infeasible => return None,
            }
        }
        if hi[i] < lo[i] {
            let m = 0.5 * (lo[i] + hi[i]);
            lo[i] = m;
            hi[i] = m;
        }
    }
    let rows = rows
        .into_iter()
        .filter(|(g, h)| {
            let top: f64 = g.iter().enumerate().map(|(k, gk)| (gk * lo[k]).max(gk * hi[k])).sum();
            top > *h - FEAS_TOL
        })
        .collect();
    Some(SliceBox { x: x.to_vec(), lo, hi, extremes, rows })
}

/// Weighted samples of a version polytope.
#[derive(Debug, Clone, Default)]
pub struct SampleCloud {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub fiber_of: Vec<usize>,
}

impl SampleCloud {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Smallest weighted fraction kept by either closed halfspace through `c`
    /// normal to `u`.
    pub fn halfspace_fraction(&self, u: &[f64], c: &[f64]) -> f64 {
        let t = dot(u, c);
        let (mut le, mut ge) = (0.0, 0.0);
        for (p, w) in self.points.iter().zip(&self.weights) {
            let s = dot(u, p);
            if s <= t {
                le += w;
            }
            if s >= t {
                ge += w;
            }
        }
        le.min(ge) / self.total()
    }
}

/// Result of `approx_centerpoint`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenterpointEstimate {
    pub point: Vec<f64>,
    /// Minimum retained fraction over the scoring directions (`None` when no
    /// samples were available and the LP fallback point was used).
    pub retained: Option<f64>,
    /// Estimated mixed-integer volume.
    pub volume: f64,
    pub live_fibers: usize,
    /// Every slice has collapsed below numerical resolution.
    pub collapsed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("version set has no nonempty fiber")]
pub struct EmptyVersionSet;

/// Output of one sampling pass, including which fibers turned out empty.
#[derive(Debug, Clone)]
pub struct CenterpointPass {
    pub estimate: CenterpointEstimate,
    pub nonempty: Vec<bool>,
    pub cloud: SampleCloud,
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.gen::<f64>().max(1e-300), rng.gen());
                (-2.0 * a.ln()).sqrt() * (std::f64::consts::TAU * b).cos()
            })
            .collect();
        if let Some(u) = normalized(&v) {
            return u;
        }
    }
}

fn dense(x: &[i64], y: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v as f64).chain(y.iter().copied()).collect()
}

fn weighted_median(vals: &[(f64, f64)]) -> f64 {
    let mut v = vals.to_vec();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = v.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for (x, w) in &v {
        acc += w;
        if acc >= 0.5 * total {
            return *x;
        }
    }
    v.last().map_or(0.0, |p| p.0)
}

/// Approximate mixed-integer centerpoint of `p`.
///
/// Each nonempty slice is sampled by rejection inside its bounding box, with the
/// sample budget split in proportion to box volume. Candidates are the fiber
/// centroids and the global centroid placed on the weighted-median fiber; the one
/// with the best worst-case retained fraction over `SCORE_DIRECTIONS` random
/// directions wins. Deterministic given `seed`.
pub fn approx_centerpoint(p: &VersionPolytope, samples: usize, seed: u64) -> Result<CenterpointPass, EmptyVersionSet> {
    let n = p.n;
    let d = p.d();
    let r = p.base.radius;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nonempty = Vec::with_capacity(p.fibers.len());
    let mut slices = Vec::new();
    for x in &p.fibers {
        let s = slice_box(p, x);
        nonempty.push(s.is_some());
        slices.extend(s);
    }
    if slices.is_empty() {
        return Err(EmptyVersionSet);
    }
    let fallback = |slices: &[SliceBox]| {
        let s = slices
            .iter()
            .max_by(|a, b| a.volume().total_cmp(&b.volume()))
            .expect("nonempty");
        let mut y = vec![0.0; d];
        for e in &s.extremes {
            for (yi, ei) in y.iter_mut().zip(e) {
                *yi += ei / s.extremes.len() as f64;
            }
        }
        dense(&s.x, &y)
    };
    let collapsed = slices.iter().all(|s| s.collapsed(r));
    let box_total: f64 = slices.iter().map(SliceBox::volume).sum();
    if collapsed || !(box_total > 0.0) || samples == 0 {
        let estimate = CenterpointEstimate {
            point: fallback(&slices),
            retained: None,
            volume: 0.0,
            live_fibers: slices.len(),
            collapsed,
        };
        return Ok(CenterpointPass { estimate, nonempty, cloud: SampleCloud::default() });
    }

    let mut cloud = SampleCloud::default();
    let mut centroids: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    let mut volume = 0.0;
    for (j, s) in slices.iter().enumerate() {
        let vol = s.volume();
        if !(vol > 0.0) {
            continue;
        }
        let want = ((samples as f64) * vol / box_total).round().max(1.0) as usize;
        let max_attempts = 40 * want + 100;
        let mut accepted = Vec::with_capacity(want);
        let mut attempts = 0usize;
        while accepted.len() < want && attempts < max_attempts {
            attempts += 1;
            let y: Vec<f64> = (0..d).map(|k| s.lo[k] + (s.hi[k] - s.lo[k]) * rng.gen::<f64>()).collect();
            if s.contains(&y) {
                accepted.push(y);
            }
        }
        if accepted.is_empty() {
            continue;
        }
        let w = vol / attempts as f64;
        volume += w * accepted.len() as f64;
        let mut c = vec![0.0; d];
        for y in &accepted {
            for (ci, yi) in c.iter_mut().zip(y) {
                *ci += yi / accepted.len() as f64;
            }
        }
        centroids.push((j, c, w * accepted.len() as f64));
        for y in accepted {
            cloud.points.push(dense(&s.x, &y));
            cloud.weights.push(w);
            cloud.fiber_of.push(j);
        }
    }
    if cloud.points.is_empty() {
        let estimate = CenterpointEstimate {
            point: fallback(&slices),
            retained: None,
            volume: 0.0,
            live_fibers: slices.len(),
            collapsed: false,
        };
        return Ok(CenterpointPass { estimate, nonempty, cloud });
    }

    let mut candidates: Vec<Vec<f64>> = centroids.iter().map(|(j, c, _)| dense(&slices[*j].x, c)).collect();
    if n > 0 {
        let total = cloud.total();
        let mut ybar = vec![0.0; d];
        for (pt, w) in cloud.points.iter().zip(&cloud.weights) {
            for (k, yk) in ybar.iter_mut().enumerate() {
                *yk += w * pt[n + k] / total;
            }
        }
        let xmed: Vec<i64> = (0..n)
            .map(|i| {
                let vals: Vec<(f64, f64)> = centroids.iter().map(|(j, _, m)| (slices[*j].x[i] as f64, *m)).collect();
                weighted_median(&vals).round() as i64
            })
            .collect();
        let cand = dense(&xmed, &ybar);
        if p.contains(&cand) {
            candidates.push(cand);
        }
    }

    let dim = n + d;
    let total = cloud.total();
    let mut scores = vec![f64::INFINITY; candidates.len()];
    let mut proj: Vec<(f64, f64)> = Vec::with_capacity(cloud.points.len());
    let mut prefix = Vec::with_capacity(cloud.points.len() + 1);
    for _ in 0..SCORE_DIRECTIONS {
        let u = random_unit(&mut rng, dim);
        proj.clear();
        proj.extend(cloud.points.iter().zip(&cloud.weights).map(|(pt, w)| (dot(&u, pt), *w)));
        proj.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        prefix.clear();
        prefix.push(0.0);
        let mut acc = 0.0;
        for (_, w) in &proj {
            acc += w;
            prefix.push(acc);
        }
        for (ci, c) in candidates.iter().enumerate() {
            let t = dot(&u, c);
            let below = proj.partition_point(|q| q.0 < t);
            let upto = proj.partition_point(|q| q.0 <= t);
            let le = prefix[upto];
            let ge = acc - prefix[below];
            let f = le.min(ge) / total;
            if f < scores[ci] {
                scores[ci] = f;
            }
        }
    }
    let mut best = 0;
    for i in 1..candidates.len() {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    let estimate = CenterpointEstimate {
        point: candidates.swap_remove(best),
        retained: Some(scores[best]),
        volume,
        live_fibers: slices.len(),
        collapsed: false,
    };
    Ok(CenterpointPass { estimate, nonempty, cloud })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_center() {
        let p = VersionPolytope::new(0, 2, 1.0).unwrap();
        let c = approx_centerpoint(&p, 10_000, 1).unwrap().estimate;
        assert!(c.point[0].abs() < 0.05 && c.point[1].abs() < 0.05, "{:?}", c.point);
        assert!((c.volume - 4.0).abs() < 1e-9);
    }

    #[test]
    fn triangle_centroid() {
        let mut p = VersionPolytope::new(0, 2, 1.0).unwrap();
        p.cut_through(&[-1.0, 0.0], &[0.0, 0.0]);
        p.cut_through(&[0.0, -1.0], &[0.0, 0.0]);
        p.cut_through(&[1.0, 1.0], &[1.0, 0.0]);
        let c = approx_centerpoint(&p, 10_000, 2).unwrap().estimate;
        assert!((c.point[0] - 1.0 / 3.0).abs() < 0.03 && (c.point[1] - 1.0 / 3.0).abs() < 0.03, "{:?}", c.point);
    }

    #[test]
    fn mixed_box_retained_fraction() {
        let p = VersionPolytope::new(1, 1, 1.0).unwrap();
        let pass = approx_centerpoint(&p, 10_000, 3).unwrap();
        let a = pass.estimate.retained.unwrap();
        assert!(a >= 0.25 - 0.05, "{a}");
        assert_eq!(pass.estimate.point[0], 0.0);
    }

    #[test]
    fn empty_version_set() {
        let mut p = VersionPolytope::new(0, 1, 1.0).unwrap();
        p.cut_through(&[1.0], &[-2.0]);
        assert!(approx_centerpoint(&p, 100, 0).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let p = VersionPolytope::new(1, 2, 1.0).unwrap();
        let a = approx_centerpoint(&p, 2_000, 9).unwrap().estimate.point;
        let b = approx_centerpoint(&p, 2_000, 9).unwrap().estimate.point;
        assert_eq!(a, b);
    }
}
