use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Which chart output a query inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Sep,
    Val,
    Sub,
    /// The whole first-order record: the separation vector at infeasible points,
    /// `[value, subgradient…]` at feasible ones.
    Info,
}

/// A binary predicate on the chart output, with a stable identifier.
#[derive(Clone)]
pub struct Predicate {
    pub id: String,
    pub rule: PredicateRule,
}

#[derive(Clone)]
pub enum PredicateRule {
    /// The output vector is identically zero (for `Sep`: the point is feasible).
    IsZero,
    /// The output equals one of the listed vectors bit-for-bit.
    InSet(Vec<Vec<f64>>),
    Custom(Arc<dyn Fn(&[f64]) -> bool + Send + Sync>),
}

impl Predicate {
    pub fn is_zero() -> Self {
        Self { id: "is_zero".into(), rule: PredicateRule::IsZero }
    }

    pub fn in_set(id: impl Into<String>, values: Vec<Vec<f64>>) -> Self {
        Self { id: id.into(), rule: PredicateRule::InSet(values) }
    }

    pub fn custom(id: impl Into<String>, f: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Self { id: id.into(), rule: PredicateRule::Custom(Arc::new(f)) }
    }

    pub fn eval(&self, v: &[f64]) -> bool {
        match &self.rule {
            PredicateRule::IsZero => v.iter().all(|x| *x == 0.0),
            PredicateRule::InSet(set) => set.iter().any(|s| bit_equal(s, v)),
            PredicateRule::Custom(f) => f(v),
        }
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Predicate({})", self.id)
    }
}

/// Exact equality of float vectors (`-0.0 == 0.0`, NaN never equal).
pub fn bit_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y)
}

/// How the chart output is post-processed before the algorithm sees it.
#[derive(Debug, Clone)]
pub enum Form {
    Full,
    /// Bit `index` of coordinate `coord` (index 64 is the sign bit), after adding
    /// `shift` (value target only).
    Bit { coord: usize, index: i32, shift: f64 },
    /// `sgn(⟨dir, output⟩ − c)` with `sgn(0) = +1`.
    Threshold { dir: Vec<f64>, c: f64 },
    Binary(Predicate),
}

impl Form {
    pub fn kind(&self) -> FormKind {
        match self {
            Form::Full => FormKind::Full,
            Form::Bit { .. } => FormKind::Bit,
            Form::Threshold { .. } => FormKind::Threshold,
            Form::Binary(_) => FormKind::Binary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    Full,
    Bit,
    Threshold,
    Binary,
}

#[derive(Debug, Clone)]
pub struct Query {
    pub point: Vec<f64>,
    pub target: Target,
    pub form: Form,
}

impl Query {
    pub fn full(point: Vec<f64>, target: Target) -> Self {
        Self { point, target, form: Form::Full }
    }

    pub fn bit(point: Vec<f64>, target: Target, coord: usize, index: i32) -> Self {
        Self { point, target, form: Form::Bit { coord, index, shift: 0.0 } }
    }

    pub fn value_bit(point: Vec<f64>, index: i32, shift: f64) -> Self {
        Self { point, target: Target::Val, form: Form::Bit { coord: 0, index, shift } }
    }

    pub fn threshold(point: Vec<f64>, target: Target, dir: Vec<f64>, c: f64) -> Self {
        Self { point, target, form: Form::Threshold { dir, c } }
    }

    pub fn binary(point: Vec<f64>, target: Target, p: Predicate) -> Self {
        Self { point, target, form: Form::Binary(p) }
    }

    /// The one-bit feasibility query.
    pub fn is_feasible(point: Vec<f64>) -> Self {
        Self::binary(point, Target::Sep, Predicate { id: "feasible".into(), rule: PredicateRule::IsZero })
    }
}

/// What an oracle returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Response {
    Vector(Vec<f64>),
    Scalar(f64),
    Sign(i8),
    Bit(u8),
    Bool(bool),
}

impl Response {
    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Response::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Response::Scalar(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_sign(&self) -> Option<i8> {
        match self {
            Response::Sign(s) => Some(*s),
            _ => None,
        }
    }

    pub fn as_bit(&self) -> Option<u8> {
        match self {
            Response::Bit(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Response::Bool(b) => Some(*b),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Response::Vector(_) => 0,
            Response::Scalar(_) => 1,
            Response::Sign(_) => 2,
            Response::Bit(_) => 3,
            Response::Bool(_) => 4,
        }
    }

    /// A total lexicographic order used for deterministic tie-breaking.
    pub fn lex_cmp(&self, other: &Response) -> Ordering {
        match (self, other) {
            (Response::Vector(a), Response::Vector(b)) => {
                for (x, y) in a.iter().zip(b) {
                    match x.total_cmp(y) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
                a.len().cmp(&b.len())
            }
            (Response::Scalar(a), Response::Scalar(b)) => a.total_cmp(b),
            (Response::Sign(a), Response::Sign(b)) => a.cmp(b),
            (Response::Bit(a), Response::Bit(b)) => a.cmp(b),
            (Response::Bool(a), Response::Bool(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }

    /// Exact equality (vectors compared bit-for-bit up to signed zero).
    pub fn same(&self, other: &Response) -> bool {
        match (self, other) {
            (Response::Vector(a), Response::Vector(b)) => bit_equal(a, b),
            (Response::Scalar(a), Response::Scalar(b)) => a == b,
            _ => self == other,
        }
    }
}
