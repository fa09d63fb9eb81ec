//! Oracle taxonomy: full, bit, threshold and binary queries on first-order charts,
//! with per-query accounting and replayable transcripts.

mod query;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use query::{bit_equal, Form, FormKind, Predicate, PredicateRule, Query, Response, Target};

use crate::instance::Instance;
use crate::linalg::dot;

/// Bit index reserved for the sign.
pub const SIGN_BIT: i32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("ill-formed query: {0}")]
    IllFormed(String),
    #[error("unsupported query class: {0}")]
    Unsupported(String),
    /// Raised by harnesses that end a run (game over, budget exhausted).
    #[error("stopped by harness")]
    Stop,
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Bit `index` of `v` in sign–magnitude fixed point: index 64 is the sign (1 for
/// negative), otherwise `⌊|v|·2^(−index)⌋ mod 2`.
pub fn bit_of(v: f64, index: i32) -> u8 {
    if index == SIGN_BIT {
        return u8::from(v < 0.0);
    }
    let s = (v.abs() * 2f64.powi(-index)).floor();
    u8::from(s % 2.0 == 1.0)
}

/// `sgn(t)` with `sgn(0) = +1`.
pub fn sign(t: f64) -> i8 {
    if t >= 0.0 {
        1
    } else {
        -1
    }
}

/// Length of the chart output for `target` when the ambient dimension is `dim`.
fn output_len(target: Target, dim: usize) -> Option<usize> {
    match target {
        Target::Sep | Target::Sub => Some(dim),
        Target::Val => Some(1),
        Target::Info => None,
    }
}

/// Checks that `q` is well formed for ambient dimension `dim`.
pub fn validate(q: &Query, dim: usize) -> Result<(), OracleError> {
    if q.point.len() != dim {
        return Err(OracleError::IllFormed(format!("point has {} coordinates, expected {dim}", q.point.len())));
    }
    if q.point.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::IllFormed("non-finite point".into()));
    }
    match &q.form {
        Form::Full | Form::Binary(_) => Ok(()),
        Form::Bit { coord, index, shift } => {
            let len = output_len(q.target, dim)
                .ok_or_else(|| OracleError::IllFormed("bit query on composite target".into()))?;
            if *coord >= len {
                return Err(OracleError::IllFormed(format!("bit coordinate {coord} out of range")));
            }
            if !(-64..=64).contains(index) {
                return Err(OracleError::IllFormed(format!("bit index {index} outside [-64, 64]")));
            }
            if *shift != 0.0 && q.target != Target::Val {
                return Err(OracleError::IllFormed("shift is only legal for value bits".into()));
            }
            if !shift.is_finite() {
                return Err(OracleError::IllFormed("non-finite shift".into()));
            }
            Ok(())
        }
        Form::Threshold { dir, c } => {
            let len = output_len(q.target, dim)
                .ok_or_else(|| OracleError::IllFormed("threshold query on composite target".into()))?;
            if dir.len() != len {
                return Err(OracleError::IllFormed(format!("threshold direction has length {}, expected {len}", dir.len())));
            }
            if !c.is_finite() || dir.iter().any(|v| !v.is_finite()) {
                return Err(OracleError::IllFormed("non-finite threshold".into()));
            }
            Ok(())
        }
    }
}

/// Applies a (validated) query form to a chart output vector.
pub fn apply_form(form: &Form, output: &[f64]) -> Response {
    match form {
        Form::Full => {
            if output.len() == 1 {
                Response::Scalar(output[0])
            } else {
                Response::Vector(output.to_vec())
            }
        }
        Form::Bit { coord, index, shift } => Response::Bit(bit_of(output[*coord] + shift, *index)),
        Form::Threshold { dir, c } => Response::Sign(sign(dot(dir, output) - c)),
        Form::Binary(p) => Response::Bool(p.eval(output)),
    }
}

/// Per-kind query counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounter {
    pub full: u64,
    pub bit: u64,
    pub threshold: u64,
    pub binary: u64,
    pub total: u64,
}

impl QueryCounter {
    pub fn record(&mut self, kind: FormKind) {
        match kind {
            FormKind::Full => self.full += 1,
            FormKind::Bit => self.bit += 1,
            FormKind::Threshold => self.threshold += 1,
            FormKind::Binary => self.binary += 1,
        }
        self.total += 1;
    }

    pub fn get(&self, kind: FormKind) -> u64 {
        match kind {
            FormKind::Full => self.full,
            FormKind::Bit => self.bit,
            FormKind::Threshold => self.threshold,
            FormKind::Binary => self.binary,
        }
    }

    /// Structured per-kind and total counts.
    pub fn budget_report(&self) -> QueryCounter {
        self.clone()
    }
}

/// One transcript line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub form: FormRecord,
    pub target: Target,
    pub point: Vec<f64>,
    pub response: Response,
    pub cumulative_total: u64,
}

/// Serialisable description of a query form (predicates by identifier).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FormRecord {
    Full,
    Bit { coord: usize, index: i32, shift: f64 },
    Threshold { dir: Vec<f64>, c: f64 },
    Binary { id: String, values: Option<Vec<Vec<f64>>> },
}

impl From<&Form> for FormRecord {
    fn from(f: &Form) -> Self {
        match f {
            Form::Full => FormRecord::Full,
            Form::Bit { coord, index, shift } => FormRecord::Bit { coord: *coord, index: *index, shift: *shift },
            Form::Threshold { dir, c } => FormRecord::Threshold { dir: dir.clone(), c: *c },
            Form::Binary(p) => FormRecord::Binary {
                id: p.id.clone(),
                values: match &p.rule {
                    PredicateRule::InSet(v) => Some(v.clone()),
                    _ => None,
                },
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn push(&mut self, q: &Query, r: &Response, total: u64) {
        self.records.push(TranscriptRecord {
            form: FormRecord::from(&q.form),
            target: q.target,
            point: q.point.clone(),
            response: r.clone(),
            cumulative_total: total,
        });
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serialises"));
            out.push('\n');
        }
        out
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.to_jsonl().as_bytes())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Anything that answers queries over a fixed ambient dimension.
pub trait Oracle {
    fn dim(&self) -> usize;
    fn answer(&mut self, q: &Query) -> Result<Response, OracleError>;
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn answer(&mut self, q: &Query) -> Result<Response, OracleError> {
        (**self).answer(q)
    }
}

impl<O: Oracle + ?Sized> Oracle for Box<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn answer(&mut self, q: &Query) -> Result<Response, OracleError> {
        (**self).answer(q)
    }
}

/// The exact chart output of `inst` at `z` for `target`.
pub fn chart_output(inst: &Instance, z: &[f64], target: Target) -> Vec<f64> {
    match target {
        Target::Sep => inst.feasible.separate(z),
        Target::Val => vec![inst.objective.eval(z)],
        Target::Sub => inst.objective.subgradient(z),
        Target::Info => {
            let s = inst.feasible.separate(z);
            if s.iter().any(|v| *v != 0.0) {
                s
            } else {
                let (v, i) = inst.objective.eval_with_index(z);
                std::iter::once(v).chain(inst.objective.pieces[i].a.iter().copied()).collect()
            }
        }
    }
}

/// Answers `q` on `inst` and charges one query to `counter`. Ill-formed queries
/// fail before anything is counted.
pub fn answer(inst: &Instance, q: &Query, counter: &mut QueryCounter) -> Result<Response, OracleError> {
    validate(q, inst.dim())?;
    let r = apply_form(&q.form, &chart_output(inst, &q.point, q.target));
    counter.record(q.form.kind());
    Ok(r)
}

/// The exact charts of a fixed instance.
#[derive(Debug, Clone, Copy)]
pub struct InstanceOracle<'a> {
    pub instance: &'a Instance,
}

impl<'a> InstanceOracle<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        Self { instance }
    }
}

impl Oracle for InstanceOracle<'_> {
    fn dim(&self) -> usize {
        self.instance.dim()
    }

    fn answer(&mut self, q: &Query) -> Result<Response, OracleError> {
        validate(q, self.dim())?;
        Ok(apply_form(&q.form, &chart_output(self.instance, &q.point, q.target)))
    }
}

/// Validates, counts and optionally records every query forwarded to `inner`.
#[derive(Debug)]
pub struct Session<O> {
    pub inner: O,
    pub counter: QueryCounter,
    pub transcript: Option<Transcript>,
}

impl<O: Oracle> Session<O> {
    pub fn new(inner: O) -> Self {
        Self { inner, counter: QueryCounter::default(), transcript: None }
    }

    pub fn recording(inner: O) -> Self {
        Self { inner, counter: QueryCounter::default(), transcript: Some(Transcript::default()) }
    }
}

impl<O: Oracle> Oracle for Session<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn answer(&mut self, q: &Query) -> Result<Response, OracleError> {
        validate(q, self.dim())?;
        let r = self.inner.answer(q)?;
        self.counter.record(q.form.kind());
        if let Some(t) = self.transcript.as_mut() {
            t.push(q, &r, self.counter.total);
        }
        Ok(r)
    }
}
