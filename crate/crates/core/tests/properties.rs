use proptest::prelude::*;

use mico_core::halving::{split_set, Split};
use mico_core::inexact::{AuaCase, UnderModel};
use mico_core::linalg::{dist2, dot, normalized, sub};
use mico_core::recovery::{approx_unit_vector, unit_vector_queries};
use mico_core::suite::{random_instance, GeneratorSpec};
use mico_core::{Instance, MaxAffineFunction};

fn nonzero_vec(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..=max_dim).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-6))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn unit_vector_is_accurate(g in nonzero_vec(8), eps in 0.005f64..0.5) {
        let r = approx_unit_vector(|a| Ok(if dot(a, &g) >= 0.0 { 1 } else { -1 }), g.len(), eps).unwrap();
        let unit = normalized(&g).unwrap();
        prop_assert!(dist2(&r.vector, &unit) <= eps);
        prop_assert_eq!(r.queries, unit_vector_queries(g.len(), eps));
    }

    #[test]
    fn split_is_a_balanced_partition(labels in prop::collection::vec(0u8..6, 2..60)) {
        let members: Vec<usize> = (0..labels.len()).collect();
        let responses: Vec<Vec<f64>> = labels.iter().map(|&l| vec![l as f64]).collect();
        let total = members.len();
        match split_set(&members, &responses) {
            Split::Majority { value, members: ms } => {
                prop_assert!(2 * ms.len() > total);
                prop_assert!(ms.iter().all(|&m| responses[m] == value));
            }
            Split::Sets { a, u0, u1 } => {
                prop_assert!(4 * u1.len() >= total && 2 * u1.len() <= total);
                let mut all: Vec<usize> = u0.iter().chain(&u1).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, members);
                prop_assert!(u1.iter().all(|&m| a.contains(&responses[m])));
                prop_assert!(u0.iter().all(|&m| !a.contains(&responses[m])));
            }
        }
    }

    #[test]
    fn separation_keeps_every_feasible_point(seed in 0u64..500, pt in prop::collection::vec(-2.0f64..2.0, 4),
        others in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 4), 64)) {
        let inst = random_instance(&GeneratorSpec::standard(1, 3), seed);
        let g = inst.feasible.separate(&pt);
        if g.iter().all(|v| *v == 0.0) {
            prop_assert!(inst.feasible.contains(&pt));
        } else {
            prop_assert!(!inst.feasible.contains(&pt));
            for w in others.iter().filter(|w| inst.feasible.contains(w)) {
                prop_assert!(dot(&g, &sub(w, &pt)) < 0.0);
            }
        }
    }

    #[test]
    fn instance_json_round_trip(seed in 0u64..200, n in 0usize..3, d in 1usize..4) {
        let inst = random_instance(&GeneratorSpec::standard(n, d), seed);
        let back = Instance::from_json(&inst.to_json()).unwrap();
        let z = vec![0.25; n + d];
        prop_assert!((inst.eval(&z) - back.eval(&z)).abs() < 1e-12);
        prop_assert_eq!(inst.label, back.label);
    }

    #[test]
    fn exact_tangents_keep_the_model_consistent(rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..6),
        pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..12)) {
        let f = MaxAffineFunction::from_rows(&rows).unwrap();
        let mut model = UnderModel::new();
        for z in &pts {
            let (case, _) = model.aua_update(z, f.eval(z), &f.subgradient(z));
            prop_assert_eq!(case, AuaCase::Append);
        }
        prop_assert!(model.consistency_violation() <= 1e-9);
        for z in &pts {
            prop_assert!(model.eval(z) <= f.eval(z) + 1e-9);
        }
    }
}
