//! Deterministic instance generators and the bundled test suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{integer_fibers, AffinePiece, ClassParams, Halfspace, Instance, InstanceError, MaxAffineFunction, Polytope};
use crate::linalg::{norm1, normalized};

/// Shape of generated instances.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorSpec {
    pub n: usize,
    pub d: usize,
    pub radius: f64,
    pub rho: f64,
    pub lipschitz: f64,
    pub pieces: usize,
    pub cuts: usize,
}

impl GeneratorSpec {
    /// Defaults used by the bundled suite: `R = 1` for continuous, `R = 2` for
    /// mixed instances (so several fibers can hold deep points), `ρ = 0.5`, `M = 1`.
    pub fn standard(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            radius: if n == 0 { 1.0 } else { 2.0 },
            rho: 0.5,
            lipschitz: 1.0,
            pieces: 2 + n + d,
            cuts: 1 + (n + d) % 2,
        }
    }
}

fn candidate(spec: &GeneratorSpec, rng: &mut ChaCha8Rng, label: &str) -> Instance {
    let dim = spec.n + spec.d;
    let m = spec.lipschitz;
    let mut pieces = Vec::with_capacity(spec.pieces);
    for _ in 0..spec.pieces {
        let mut a: Vec<f64> = (0..dim).map(|_| rng.gen_range(-m..=m)).collect();
        let l1 = norm1(&a[spec.n..]);
        if l1 > m {
            for v in a[spec.n..].iter_mut() {
                *v *= m / l1;
            }
        }
        for v in a[..spec.n].iter_mut() {
            *v *= 0.5;
        }
        pieces.push(AffinePiece { a, b: rng.gen_range(-0.5..0.5) });
    }
    let mut c = Polytope::cube(dim, spec.radius);
    for _ in 0..spec.cuts {
        let g: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(u) = normalized(&g) {
            let off = rng.gen_range(0.4..0.8) * spec.radius;
            c.halfspaces.push(Halfspace::new(u, off).expect("unit normal"));
        }
    }
    let params = ClassParams { n: spec.n, d: spec.d, radius: spec.radius, rho: spec.rho, lipschitz: m };
    let f = MaxAffineFunction::new(pieces).expect("nonempty");
    Instance::new(f, c, params, label).expect("consistent dimensions")
}

/// Candidate draws before [`try_random_instance`] gives up.
pub const MAX_ATTEMPTS: usize = 10_000;

/// A random class member: retries (deterministically) until the optimal fiber
/// holds a `ρ`-deep point and every slope bound holds.
pub fn try_random_instance(spec: &GeneratorSpec, seed: u64) -> Result<Instance, InstanceError> {
    if spec.d == 0 {
        return Err(InstanceError::ClassViolation("d must be at least 1".into()));
    }
    integer_fibers(spec.n, spec.radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label = format!("gen-n{}-d{}-s{}", spec.n, spec.d, seed);
    for _ in 0..MAX_ATTEMPTS {
        let inst = candidate(spec, &mut rng, &label);
        if inst.check_gradient_bound().is_ok() && inst.check_class().is_ok() {
            return Ok(inst);
        }
    }
    Err(InstanceError::ClassViolation(format!("no class member after {MAX_ATTEMPTS} draws")))
}

/// [`try_random_instance`] for shapes known to be generable.
pub fn random_instance(spec: &GeneratorSpec, seed: u64) -> Instance {
    try_random_instance(spec, seed).unwrap_or_else(|e| panic!("cannot generate {spec:?}: {e}"))
}

/// The bundled suite: for every `n ≤ 2`, `d ≤ 3`, a fixed number of seeded instances.
pub fn bundled_suite(per_shape: usize) -> Vec<Instance> {
    let mut out = Vec::new();
    for n in 0..=2 {
        for d in 1..=3 {
            let spec = GeneratorSpec::standard(n, d);
            for k in 0..per_shape {
                out.push(random_instance(&spec, 1000 * (10 * n as u64 + d as u64) + k as u64));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_instances_are_in_class() {
        for inst in bundled_suite(1) {
            assert!(inst.check_class().is_ok(), "{}", inst.label);
            assert!(inst.check_gradient_bound().is_ok());
        }
    }

    #[test]
    fn oversized_shapes_fail_fast() {
        assert!(matches!(try_random_instance(&GeneratorSpec::standard(7, 1), 0), Err(InstanceError::TooManyFibers(_))));
        assert!(try_random_instance(&GeneratorSpec::standard(1, 0), 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec::standard(1, 2);
        assert_eq!(random_instance(&spec, 7), random_instance(&spec, 7));
    }
}
