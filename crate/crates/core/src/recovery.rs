//! Reconstructing separations, value cuts and value comparisons from bit queries
//! and inner-product sign queries.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::ClassParams;
use crate::linalg::{axpy, orthonormalize_against, scale};
use crate::oracle::{Oracle, OracleError, Query, Response, Target, SIGN_BIT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("accuracy {0} outside the admissible range")]
    EpsOutOfRange(f64),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Which restricted oracle the approximations are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApproxMode {
    /// Sign and fixed-point bits of chart outputs.
    Bit,
    /// Signs of inner products with chosen directions (and value thresholds).
    Dir,
}

/// Target accuracy of an approximate oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxOracleSpec {
    pub eps: f64,
    pub mode: ApproxMode,
}

impl ApproxOracleSpec {
    /// `ε' = ε / (2 (n+d) R)`, the per-coordinate accuracy of bit mode.
    pub fn eps_prime(&self, p: &ClassParams) -> f64 {
        self.eps / (2.0 * p.dim() as f64 * p.radius)
    }

    pub fn validate(&self, p: &ClassParams) -> Result<(), RecoveryError> {
        if !(self.eps > 0.0 && self.eps <= 2.0 * p.lipschitz * p.radius) {
            return Err(RecoveryError::EpsOutOfRange(self.eps));
        }
        Ok(())
    }
}

/// A recovered vector and the number of oracle queries spent on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub vector: Vec<f64>,
    pub queries: u64,
}

/// Sign queries per two-dimensional bisection: `⌈log₂(8/δ)⌉`.
pub fn bisection_steps(dim: usize, eps: f64) -> u64 {
    let delta = eps / (2.0 * dim as f64);
    (8.0 / delta).log2().ceil() as u64
}

/// Exact number of sign queries `approx_unit_vector` issues.
pub fn unit_vector_queries(dim: usize, eps: f64) -> u64 {
    if dim <= 1 {
        1
    } else {
        (dim as u64 - 1) * bisection_steps(dim, eps)
    }
}

/// Recovers `g/‖g‖₂` to Euclidean accuracy `eps` from the signs `sgn⟨a, g⟩`.
///
/// Two coordinates of the current orthonormal frame are resolved at a time by
/// bisecting an angular cone; the recovered direction then replaces both frame
/// vectors and the recursion continues on the smaller frame.
pub fn approx_unit_vector<F>(mut sign_query: F, dim: usize, eps: f64) -> Result<Recovered, RecoveryError>
where
    F: FnMut(&[f64]) -> Result<i8, OracleError>,
{
    if dim == 0 {
        return Err(RecoveryError::ZeroDimension);
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(RecoveryError::EpsOutOfRange(eps));
    }
    if dim == 1 {
        let s = sign_query(&[1.0])?;
        return Ok(Recovered { vector: vec![f64::from(s)], queries: 1 });
    }
    let steps = bisection_steps(dim, eps);
    let mut frame: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut queries = 0;
    while frame.len() >= 2 {
        let (w1, w2) = (frame[0].clone(), frame[1].clone());
        let (mut lo, mut hi) = (-std::f64::consts::PI, std::f64::consts::PI);
        for _ in 0..steps {
            let mid = 0.5 * (lo + hi);
            let mut a = scale(&w1, -mid.sin());
            axpy(&mut a, mid.cos(), &w2);
            queries += 1;
            if sign_query(&a)? >= 0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let th = 0.5 * (lo + hi);
        let mut g = scale(&w1, th.cos());
        axpy(&mut g, th.sin(), &w2);
        if frame.len() == 2 {
            return Ok(Recovered { vector: g, queries });
        }
        let mut next = vec![g];
        for w in &frame[2..] {
            if let Some(v) = orthonormalize_against(w, &next, 1e-12) {
                next.push(v);
            }
        }
        frame = next;
    }
    Ok(Recovered { vector: frame.pop().unwrap_or_default(), queries })
}

/// Highest and lowest probed bit positions for a magnitude bound and accuracy.
pub fn bit_range(bound: f64, eps_inf: f64) -> (i32, i32) {
    let hi = bound.max(f64::MIN_POSITIVE).log2().floor() as i32;
    let lo = -((1.0 / eps_inf).log2().floor() as i32);
    (hi.clamp(-63, 63), lo.clamp(-64, hi.clamp(-63, 63)))
}

/// Exact number of bit queries `approx_vector_bits` issues.
pub fn vector_bits_queries(dim: usize, bound: f64, eps_inf: f64) -> u64 {
    let (hi, lo) = bit_range(bound, eps_inf);
    dim as u64 * (2 + (hi - lo) as u64)
}

/// Recovers `v` (with `‖v‖∞ ≤ bound`) to accuracy `eps_inf` in ℓ∞ by probing the sign
/// and the bits `⌊log₂ bound⌋ … −⌊log₂(1/eps_inf)⌋` of every coordinate.
pub fn approx_vector_bits<F>(
    mut bit_query: F,
    dim: usize,
    bound: f64,
    eps_inf: f64,
) -> Result<Recovered, RecoveryError>
where
    F: FnMut(usize, i32) -> Result<u8, OracleError>,
{
    if !(eps_inf > 0.0) || !eps_inf.is_finite() {
        return Err(RecoveryError::EpsOutOfRange(eps_inf));
    }
    let (hi, lo) = bit_range(bound, eps_inf);
    let resolution = 2f64.powi(lo);
    let mut out = Vec::with_capacity(dim);
    let mut queries = 0;
    for k in 0..dim {
        let negative = bit_query(k, SIGN_BIT)? == 1;
        queries += 1;
        let mut t = 0.0;
        for j in (lo..=hi).rev() {
            queries += 1;
            if bit_query(k, j)? == 1 {
                t += 2f64.powi(j);
            }
        }
        if resolution > eps_inf {
            t += 0.5 * resolution;
        }
        out.push(if negative { -t } else { t });
    }
    Ok(Recovered { vector: out, queries })
}

fn expect_sign(r: Response) -> Result<i8, OracleError> {
    r.as_sign().ok_or_else(|| OracleError::Internal(format!("expected a sign, got {r:?}")))
}

fn expect_bit(r: Response) -> Result<u8, OracleError> {
    r.as_bit().ok_or_else(|| OracleError::Internal(format!("expected a bit, got {r:?}")))
}

fn expect_bool(r: Response) -> Result<bool, OracleError> {
    r.as_bool().ok_or_else(|| OracleError::Internal(format!("expected a boolean, got {r:?}")))
}

/// One binary feasibility query.
pub fn query_feasible(oracle: &mut dyn Oracle, z: &[f64]) -> Result<bool, OracleError> {
    expect_bool(oracle.answer(&Query::is_feasible(z.to_vec()))?)
}

fn recover_vector(
    oracle: &mut dyn Oracle,
    z: &[f64],
    target: Target,
    mode: ApproxMode,
    bound: f64,
    bit_eps: f64,
    dir_eps: f64,
) -> Result<Vec<f64>, RecoveryError> {
    let dim = z.len();
    let r = match mode {
        ApproxMode::Bit => approx_vector_bits(
            |coord, index| expect_bit(oracle.answer(&Query::bit(z.to_vec(), target, coord, index))?),
            dim,
            bound,
            bit_eps,
        )?,
        ApproxMode::Dir => approx_unit_vector(
            |a| expect_sign(oracle.answer(&Query::threshold(z.to_vec(), target, a.to_vec(), 0.0))?),
            dim,
            dir_eps.min(0.5),
        )?,
    };
    Ok(r.vector)
}

/// Approximate separation at `z`: the zero vector iff `z` is feasible (one binary
/// query), otherwise a normal whose cut through `z` keeps every `eps`-deep point.
pub fn make_approx_separation(
    oracle: &mut dyn Oracle,
    p: &ClassParams,
    z: &[f64],
    eps: f64,
    mode: ApproxMode,
) -> Result<Vec<f64>, RecoveryError> {
    if query_feasible(oracle, z)? {
        return Ok(vec![0.0; z.len()]);
    }
    let nd = p.dim() as f64;
    let bit_eps = eps / (2.0 * nd * p.radius);
    let dir_eps = eps / (2.0 * p.radius * nd.sqrt());
    recover_vector(oracle, z, Target::Sep, mode, 1.0, bit_eps, dir_eps)
}

/// Approximate value cut at a feasible `z`: every `z'` with `⟨ĝ, z' − z⟩ ≥ 0` has
/// `f(z') ≥ f(z) − eps`. Requires every chart subgradient to satisfy `‖g‖∞ ≤ M`.
pub fn make_approx_value_cut(
    oracle: &mut dyn Oracle,
    p: &ClassParams,
    z: &[f64],
    eps: f64,
    mode: ApproxMode,
) -> Result<Vec<f64>, RecoveryError> {
    let nd = p.dim() as f64;
    let bit_eps = eps / (2.0 * nd * p.radius);
    let dir_eps = eps / (2.0 * p.lipschitz * p.radius * nd);
    recover_vector(oracle, z, Target::Sub, mode, p.lipschitz, bit_eps, dir_eps)
}

/// Queries spent by `approx_value_estimate` for a value bound `u` and accuracy `eps`.
pub fn value_estimate_queries(u: f64, eps: f64, mode: ApproxMode) -> u64 {
    match mode {
        ApproxMode::Bit => vector_bits_queries(1, u, eps),
        ApproxMode::Dir => (u / eps).log2().ceil().max(0.0) as u64,
    }
}

/// Estimates `f(z)` within `eps`, given `|f(z)| ≤ u`.
pub fn approx_value_estimate(
    oracle: &mut dyn Oracle,
    z: &[f64],
    u: f64,
    eps: f64,
    mode: ApproxMode,
) -> Result<f64, RecoveryError> {
    match mode {
        ApproxMode::Bit => {
            let r = approx_vector_bits(
                |_, index| expect_bit(oracle.answer(&Query::value_bit(z.to_vec(), index, 0.0))?),
                1,
                u,
                eps,
            )?;
            Ok(r.vector[0])
        }
        ApproxMode::Dir => {
            let (mut lo, mut hi) = (-u, u);
            for _ in 0..value_estimate_queries(u, eps, mode) {
                let mid = 0.5 * (lo + hi);
                let s = expect_sign(oracle.answer(&Query::threshold(z.to_vec(), Target::Val, vec![1.0], mid))?)?;
                if s >= 0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.5 * (lo + hi))
        }
    }
}

/// Approximate answer to "is `f(z) ≤ f(z')`?": correct whenever the two values
/// differ by more than `eps`.
pub fn approx_value_compare(
    oracle: &mut dyn Oracle,
    z: &[f64],
    z2: &[f64],
    u: f64,
    eps: f64,
    mode: ApproxMode,
) -> Result<bool, RecoveryError> {
    let a = approx_value_estimate(oracle, z, u, eps / 2.0, mode)?;
    let b = approx_value_estimate(oracle, z2, u, eps / 2.0, mode)?;
    Ok(a <= b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist2, dot, normalized};

    fn signs(g: Vec<f64>) -> impl FnMut(&[f64]) -> Result<i8, OracleError> {
        move |a| Ok(if dot(a, &g) >= 0.0 { 1 } else { -1 })
    }

    fn bits(v: Vec<f64>) -> impl FnMut(usize, i32) -> Result<u8, OracleError> {
        move |k, j| Ok(crate::oracle::bit_of(v[k], j))
    }

    #[test]
    fn axis_vector() {
        let r = approx_unit_vector(signs(vec![1.0, 0.0]), 2, 0.1).unwrap();
        assert!(dist2(&r.vector, &[1.0, 0.0]) <= 0.1);
    }

    #[test]
    fn three_four_five() {
        let r = approx_unit_vector(signs(vec![3.0, 4.0]), 2, 0.05).unwrap();
        assert!(dist2(&r.vector, &[0.6, 0.8]) <= 0.05);
        assert_eq!(r.queries, unit_vector_queries(2, 0.05));
    }

    #[test]
    fn one_dimensional_case() {
        let r = approx_unit_vector(signs(vec![-2.0]), 1, 0.1).unwrap();
        assert_eq!((r.vector, r.queries), (vec![-1.0], 1));
        assert!(approx_unit_vector(signs(vec![1.0]), 1, 1.5).is_err());
    }

    #[test]
    fn five_dimensional_within_lemma_bound() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut worst = (0.0f64, 0);
        for _ in 0..500 {
            let g: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = approx_unit_vector(signs(g.clone()), 5, 0.02).unwrap();
            worst.0 = worst.0.max(dist2(&r.vector, &normalized(&g).unwrap()));
            worst.1 = worst.1.max(r.queries);
        }
        assert!(worst.0 <= 0.02, "{}", worst.0);
        assert!(worst.1 <= 60);
    }

    #[test]
    fn bit_examples() {
        let r = approx_vector_bits(bits(vec![0.75]), 1, 1.0, 0.25).unwrap();
        assert_eq!(r.vector, vec![0.75]);
        assert_eq!(r.queries, 4);
        let r = approx_vector_bits(bits(vec![1.0 / 3.0]), 1, 1.0, 2f64.powi(-10)).unwrap();
        assert!((r.vector[0] - 1.0 / 3.0).abs() <= 2f64.powi(-10));
        let r = approx_vector_bits(bits(vec![-0.5, 0.25]), 2, 1.0, 0.125).unwrap();
        assert_eq!(r.vector, vec![-0.5, 0.25]);
    }

    #[test]
    fn bit_count_bound() {
        for &(b, e) in &[(1.0, 0.025), (3.0, 0.01), (10.0, 0.3), (0.5, 0.001)] {
            let q = vector_bits_queries(1, b, e) as f64;
            assert!(q <= (b / e).log2() + 2.0, "{b} {e} {q}");
        }
    }
}
