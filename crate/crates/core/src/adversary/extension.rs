use super::AdversaryError;
use crate::instance::{AffinePiece, MaxAffineFunction};
use crate::linalg::dot;
use crate::oracle::{apply_form, bit_of, Form, OracleError, Predicate, Query, Response, Target};

/// The `ℓ∞`-closest 0/1 point to `x`, ties toward 0.
pub fn closest_fiber(x: &[f64]) -> Vec<i64> {
    x.iter().map(|&v| i64::from(v > 0.5)).collect()
}

/// Position of a 0/1 point in lexicographic order.
pub fn fiber_index(xbar: &[i64]) -> usize {
    xbar.iter().fold(0, |acc, &b| 2 * acc + b as usize)
}

/// `{0,1}^n` in lexicographic order.
pub fn zero_one_fibers(n: usize) -> Vec<Vec<i64>> {
    (0..1usize << n).map(|k| (0..n).map(|j| ((k >> (n - 1 - j)) & 1) as i64).collect()).collect()
}

/// `M_x̄ = 3MR·sgn(x̄ − ½·1)`.
pub fn fiber_slope(xbar: &[i64], lipschitz: f64, radius: f64) -> Vec<f64> {
    xbar.iter().map(|&b| if b == 1 { 3.0 * lipschitz * radius } else { -3.0 * lipschitz * radius }).collect()
}

/// `f̂(x, y) = max{f(y) + ⟨M_x̄, x − x̄⟩, opt}` over `n + d` variables. The
/// truncation piece comes first, so at ties the chart reports the zero slope.
pub fn extend_truncate(f: &MaxAffineFunction, xbar: &[i64], lipschitz: f64, radius: f64, opt: f64) -> MaxAffineFunction {
    let n = xbar.len();
    let d = f.dim();
    let m = fiber_slope(xbar, lipschitz, radius);
    let xb: Vec<f64> = xbar.iter().map(|&v| v as f64).collect();
    let shift = dot(&m, &xb);
    let mut pieces = Vec::with_capacity(f.pieces.len() + 1);
    pieces.push(AffinePiece { a: vec![0.0; n + d], b: opt });
    for p in &f.pieces {
        let a: Vec<f64> = m.iter().chain(p.a.iter()).copied().collect();
        pieces.push(AffinePiece { a, b: p.b - shift });
    }
    MaxAffineFunction { pieces }
}

/// `ψ_F(z) = f̂_{r(x)}(z)` and its chart subgradient, with `F` indexed by
/// [`fiber_index`].
pub fn psi_eval(family: &[MaxAffineFunction], z: &[f64], n: usize, lipschitz: f64, radius: f64, opt: f64) -> (f64, Vec<f64>) {
    let r = closest_fiber(&z[..n]);
    let fhat = extend_truncate(&family[fiber_index(&r)], &r, lipschitz, radius, opt);
    (fhat.eval(z), fhat.subgradient(z))
}

/// `ψ_F` as a single max-affine function: the maximum of every tilted extension.
pub fn psi_function(family: &[MaxAffineFunction], n: usize, lipschitz: f64, radius: f64, opt: f64) -> MaxAffineFunction {
    let d = family[0].dim();
    let mut pieces = vec![AffinePiece { a: vec![0.0; n + d], b: opt }];
    for (xbar, f) in zero_one_fibers(n).iter().zip(family) {
        pieces.extend(extend_truncate(f, xbar, lipschitz, radius, opt).pieces.into_iter().skip(1));
    }
    MaxAffineFunction { pieces }
}

/// Whether value-bit queries may carry a shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitClass {
    Plain,
    Shifted,
}

/// How a fiber response is mapped back to the full-space response.
#[derive(Debug, Clone)]
pub enum PostMap {
    Identity,
    /// `v ↦ v + δ`.
    AddShift,
    /// `g ↦ (M_{r(x)}, g)`.
    PrependSlope,
    /// Answered without asking the fiber.
    Constant(Response),
}

/// A full-space query rewritten as a fiber query plus a response post-map.
#[derive(Debug, Clone)]
pub struct HereditaryTransform {
    pub inner: Option<Query>,
    pub post: PostMap,
    pub shift: f64,
    pub fiber_slope: Vec<f64>,
}

impl HereditaryTransform {
    pub fn apply(&self, inner: Option<&Response>) -> Response {
        match (&self.post, inner) {
            (PostMap::Constant(r), _) => r.clone(),
            (PostMap::AddShift, Some(Response::Scalar(v))) => Response::Scalar(v + self.shift),
            (PostMap::PrependSlope, Some(r)) => {
                let g: Vec<f64> = match r {
                    Response::Vector(g) => g.clone(),
                    Response::Scalar(g) => vec![*g],
                    other => return other.clone(),
                };
                apply_form(&Form::Full, &self.fiber_slope.iter().copied().chain(g).collect::<Vec<_>>())
            }
            (_, Some(r)) => r.clone(),
            (_, None) => Response::Bool(false),
        }
    }
}

/// Builds `(h_*, B)` for a value or subgradient query `q` at `(x, y)` whose
/// closest fiber has slope `m_r` and value shift `delta`.
pub fn hereditary_transform(
    q: &Query,
    n: usize,
    delta: f64,
    m_r: &[f64],
    bits: BitClass,
) -> Result<HereditaryTransform, AdversaryError> {
    let y = q.point[n..].to_vec();
    let mk = |inner: Option<Query>, post: PostMap| HereditaryTransform {
        inner,
        post,
        shift: delta,
        fiber_slope: m_r.to_vec(),
    };
    let t = match (q.target, &q.form) {
        (Target::Val, Form::Full) => mk(Some(Query::full(y, Target::Val)), PostMap::AddShift),
        (Target::Val, Form::Threshold { dir, c }) => {
            mk(Some(Query::threshold(y, Target::Val, dir.clone(), c - dir[0] * delta)), PostMap::Identity)
        }
        (Target::Val, Form::Bit { index, shift, .. }) => {
            if bits == BitClass::Plain {
                return Err(OracleError::Unsupported("plain value bits are not hereditary".into()).into());
            }
            mk(Some(Query::value_bit(y, *index, shift + delta)), PostMap::Identity)
        }
        (Target::Val, Form::Binary(p)) => {
            let p0 = p.clone();
            let inner = Predicate::custom(format!("{}@val+{delta}", p.id), move |v: &[f64]| p0.eval(&[v[0] + delta]));
            mk(Some(Query::binary(y, Target::Val, inner)), PostMap::Identity)
        }
        (Target::Sub, Form::Full) => mk(Some(Query::full(y, Target::Sub)), PostMap::PrependSlope),
        (Target::Sub, Form::Threshold { dir, c }) => {
            let c2 = c - dot(&dir[..n], m_r);
            mk(Some(Query::threshold(y, Target::Sub, dir[n..].to_vec(), c2)), PostMap::Identity)
        }
        (Target::Sub, Form::Bit { coord, index, .. }) => {
            if *coord < n {
                mk(None, PostMap::Constant(Response::Bit(bit_of(m_r[*coord], *index))))
            } else {
                mk(Some(Query::bit(y, Target::Sub, coord - n, *index)), PostMap::Identity)
            }
        }
        (Target::Sub, Form::Binary(p)) => {
            let p0 = p.clone();
            let m = m_r.to_vec();
            let inner = Predicate::custom(format!("{}@lift", p.id), move |g: &[f64]| {
                let full: Vec<f64> = m.iter().chain(g).copied().collect();
                p0.eval(&full)
            });
            mk(Some(Query::binary(y, Target::Sub, inner)), PostMap::Identity)
        }
        (t, _) => return Err(OracleError::Unsupported(format!("{t:?} queries have no fiber form")).into()),
    };
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::sign;

    fn abs_shift(c: f64) -> MaxAffineFunction {
        MaxAffineFunction::from_rows(&[vec![1.0, -c], vec![-1.0, c]]).unwrap()
    }

    #[test]
    fn extension_examples() {
        let f = abs_shift(0.0);
        let fhat = extend_truncate(&f, &[0], 1.0, 1.0, 0.0);
        assert_eq!(fhat.eval(&[0.5, 0.0]), 0.0);
        assert_eq!(fhat.eval(&[0.0, 0.3]), 0.3);
        for &x in &[0.34, 0.5, 0.9] {
            for &y in &[-1.0, 0.0, 1.0] {
                assert_eq!(fhat.eval(&[x, y]), 0.0);
            }
        }
    }

    #[test]
    fn psi_examples() {
        let fam = vec![abs_shift(0.0), abs_shift(0.5)];
        let (v, _) = psi_eval(&fam, &[0.5, 0.0], 1, 1.0, 1.0, 0.0);
        assert_eq!(v, 0.0);
        let (v, g) = psi_eval(&fam, &[0.0, 0.2], 1, 1.0, 1.0, 0.0);
        assert!((v - 0.2).abs() < 1e-15);
        assert_eq!(g, vec![-3.0, 1.0]);
        let (v, g) = psi_eval(&fam, &[1.0, 0.5], 1, 1.0, 1.0, 0.0);
        assert_eq!(v, 0.0);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn closest_fiber_ties_to_zero() {
        assert_eq!(closest_fiber(&[0.5, 0.51, 0.0, 1.0]), vec![0, 1, 0, 1]);
        assert_eq!(zero_one_fibers(2), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        for (i, x) in zero_one_fibers(3).iter().enumerate() {
            assert_eq!(fiber_index(x), i);
        }
    }

    #[test]
    fn threshold_value_identity() {
        let q = Query::threshold(vec![0.3, 0.0], Target::Val, vec![1.0], 2.0);
        let t = hereditary_transform(&q, 1, 0.5, &[-3.0], BitClass::Shifted).unwrap();
        let Some(Query { form: Form::Threshold { c, .. }, .. }) = &t.inner else { panic!() };
        assert_eq!(*c, 1.5);
        for k in -40..=40 {
            let v = k as f64 * 0.1;
            let inner = apply_form(&t.inner.as_ref().unwrap().form, &[v]);
            assert_eq!(t.apply(Some(&inner)), Response::Sign(sign(v + 0.5 - 2.0)));
        }
    }

    #[test]
    fn subgradient_transforms() {
        let m = vec![3.0, -3.0];
        let q = Query::threshold(vec![1.0, 0.0, 0.2], Target::Sub, vec![1.0, 2.0, 0.5], 0.25);
        let t = hereditary_transform(&q, 2, 0.0, &m, BitClass::Shifted).unwrap();
        let inner = t.inner.as_ref().unwrap();
        let Form::Threshold { dir, c } = &inner.form else { panic!() };
        assert_eq!(dir, &vec![0.5]);
        assert_eq!(*c, 0.25 - (3.0 - 6.0));
        let q = Query::bit(vec![1.0, 0.0, 0.2], Target::Sub, 1, 1);
        let t = hereditary_transform(&q, 2, 0.0, &m, BitClass::Shifted).unwrap();
        assert!(t.inner.is_none());
        assert_eq!(t.apply(None), Response::Bit(bit_of(-3.0, 1)));
        let q = Query::full(vec![1.0, 0.0, 0.2], Target::Sub);
        let t = hereditary_transform(&q, 2, 0.0, &m, BitClass::Shifted).unwrap();
        assert_eq!(t.apply(Some(&Response::Scalar(0.5))), Response::Vector(vec![3.0, -3.0, 0.5]));
    }

    #[test]
    fn plain_value_bits_are_rejected() {
        let q = Query::value_bit(vec![0.2, 0.0], 0, 0.0);
        assert!(hereditary_transform(&q, 1, 0.1, &[-3.0], BitClass::Plain).is_err());
        let t = hereditary_transform(&q, 1, 0.1, &[-3.0], BitClass::Shifted).unwrap();
        let Form::Bit { shift, .. } = t.inner.unwrap().form else { panic!() };
        assert_eq!(shift, 0.1);
    }
}
