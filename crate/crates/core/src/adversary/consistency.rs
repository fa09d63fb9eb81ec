use crate::instance::MaxAffineFunction;
use crate::linalg::dot;
use crate::lp::{BoundedLp, LpOutcome};
use crate::oracle::{apply_form, bit_of, Form, Response, Target};

/// One answered query at a known point.
#[derive(Debug, Clone)]
pub struct Record {
    pub target: Target,
    pub form: Form,
    pub response: Response,
}

const TOL: f64 = 1e-9;

fn tol(x: f64) -> f64 {
    TOL * (1.0 + x.abs())
}

fn sign_ok(t: f64, c: f64, s: i8) -> bool {
    if s >= 0 {
        t >= -tol(c)
    } else {
        t <= tol(c)
    }
}

fn response_vector(r: &Response) -> Option<Vec<f64>> {
    match r {
        Response::Vector(v) => Some(v.clone()),
        Response::Scalar(v) => Some(vec![*v]),
        _ => None,
    }
}

/// Does an output vector reproduce `r` (up to the comparison tolerance)?
fn output_ok(out: &[f64], r: &Record) -> bool {
    match (&r.form, &r.response) {
        (Form::Full, resp) => match response_vector(resp) {
            Some(v) => v.len() == out.len() && v.iter().zip(out).all(|(a, b)| (a - b).abs() <= tol(*a)),
            None => false,
        },
        (Form::Bit { coord, index, shift }, Response::Bit(b)) => {
            out.get(*coord).is_some_and(|v| bit_of(v + shift, *index) == *b)
        }
        (Form::Threshold { dir, c }, Response::Sign(s)) => {
            dir.len() == out.len() && sign_ok(dot(dir, out) - c, *c, *s)
        }
        (Form::Binary(p), Response::Bool(b)) => p.eval(out) == *b,
        _ => false,
    }
}

/// A subgradient of `f` at `z` (an element of the convex hull of the active
/// slopes) reproducing every subgradient record, if one exists. The chart
/// subgradient is preferred, then single active slopes, then an LP over the hull
/// when all records are linear in `g`.
pub fn subgradient_witness(f: &MaxAffineFunction, z: &[f64], records: &[&Record]) -> Option<Vec<f64>> {
    let subs: Vec<&Record> = records.iter().copied().filter(|r| r.target == Target::Sub).collect();
    let g0 = f.subgradient(z);
    if subs.iter().all(|r| output_ok(&g0, r)) {
        return Some(g0);
    }
    let active = f.active_pieces(z, TOL);
    for &k in &active {
        let a = &f.pieces[k].a;
        if subs.iter().all(|r| output_ok(a, r)) {
            return Some(a.clone());
        }
    }
    if active.len() < 2 || subs.iter().any(|r| !matches!(r.form, Form::Full | Form::Threshold { .. })) {
        return None;
    }
    let m = active.len();
    let slopes: Vec<&Vec<f64>> = active.iter().map(|&k| &f.pieces[k].a).collect();
    let mut lp = BoundedLp::new(vec![0.0; m], vec![0.0; m], vec![1.0; m]);
    lp.push(vec![1.0; m], 1.0);
    lp.push(vec![-1.0; m], -1.0);
    for r in subs {
        match (&r.form, &r.response) {
            (Form::Full, resp) => {
                let v = response_vector(resp)?;
                for (j, vj) in v.iter().enumerate() {
                    let row: Vec<f64> = slopes.iter().map(|a| a[j]).collect();
                    lp.push(row.iter().map(|x| -x).collect(), -vj + tol(*vj));
                    lp.push(row, vj + tol(*vj));
                }
            }
            (Form::Threshold { dir, c }, Response::Sign(s)) => {
                let row: Vec<f64> = slopes.iter().map(|a| dot(dir, a)).collect();
                if *s >= 0 {
                    lp.push(row.iter().map(|x| -x).collect(), -c + tol(*c));
                } else {
                    lp.push(row, c + tol(*c));
                }
            }
            _ => return None,
        }
    }
    match lp.minimize() {
        LpOutcome::Optimal { x, .. } => {
            let mut g = vec![0.0; z.len()];
            for (l, a) in x.iter().zip(&slopes) {
                for (gj, aj) in g.iter_mut().zip(a.iter()) {
                    *gj += l * aj;
                }
            }
            Some(g)
        }
        LpOutcome::Infeasible => None,
    }
}

/// Whether `f` could have produced every value and subgradient record at `z`
/// under some valid choice of subgradient. Records on other targets are ignored.
pub fn consistent_at(f: &MaxAffineFunction, z: &[f64], records: &[&Record]) -> bool {
    let v = [f.eval(z)];
    if !records.iter().filter(|r| r.target == Target::Val).all(|r| output_ok(&v, r)) {
        return false;
    }
    !records.iter().any(|r| r.target == Target::Sub) || subgradient_witness(f, z, records).is_some()
}

/// The response `f` gives to a query at `z`, chosen consistently with `prior`.
pub fn member_response(f: &MaxAffineFunction, z: &[f64], target: Target, form: &Form, prior: &[&Record]) -> Option<Response> {
    let out = match target {
        Target::Val => vec![f.eval(z)],
        Target::Sub => subgradient_witness(f, z, prior)?,
        _ => return None,
    };
    Some(apply_form(form, &out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs() -> MaxAffineFunction {
        MaxAffineFunction::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap()
    }

    fn rec(target: Target, form: Form, response: Response) -> Record {
        Record { target, form, response }
    }

    #[test]
    fn hull_semantics_at_a_kink() {
        let f = abs();
        let r = rec(Target::Sub, Form::Full, Response::Scalar(0.25));
        assert!(consistent_at(&f, &[0.0], &[&r]));
        let g = subgradient_witness(&f, &[0.0], &[&r]).unwrap();
        assert!((g[0] - 0.25).abs() < 1e-8);
        assert!(!consistent_at(&f, &[0.5], &[&r]));
        let t = rec(Target::Sub, Form::Threshold { dir: vec![1.0], c: 0.9 }, Response::Sign(1));
        assert!(consistent_at(&f, &[0.0], &[&t]));
        assert!(!consistent_at(&f, &[0.0], &[&t, &r]));
    }

    #[test]
    fn value_records() {
        let f = abs();
        let v = rec(Target::Val, Form::Threshold { dir: vec![1.0], c: 0.3 }, Response::Sign(-1));
        assert!(consistent_at(&f, &[0.2], &[&v]));
        assert!(!consistent_at(&f, &[0.4], &[&v]));
        let b = rec(Target::Val, Form::Bit { coord: 0, index: -1, shift: 0.0 }, Response::Bit(1));
        assert!(consistent_at(&f, &[0.5], &[&b]));
        assert!(!consistent_at(&f, &[0.25], &[&b]));
    }
}
