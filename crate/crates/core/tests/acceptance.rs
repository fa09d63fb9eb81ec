//! End-to-end acceptance suite. Runs every criterion in order, prints one
//! PASS/FAIL line each and exits nonzero if any failed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mico_core::adversary::{
    bundled_strategies, measure_hardness, ny_hard_family, run_game, verify_consistency, Adversary, BisectStrategy, BitClass,
    CenterpointStrategy, MiAdversary, RandomStrategy, Strategy,
};
use mico_core::experiments::{halving_family, transfer_bound};
use mico_core::halving::{halving_solve, ExactCenterpoint};
use mico_core::inexact::{projection_harness, ConvexBody};
use mico_core::instance::{deep_point_check, integer_fibers};
use mico_core::linalg::{dist2, dot, normalized, sub};
use mico_core::oracle::InstanceOracle;
use mico_core::recovery::{approx_unit_vector, make_approx_separation, make_approx_value_cut, ApproxMode};
use mico_core::suite::bundled_suite;
use mico_core::{
    robustify, run_sweep, solve, solve_recorded, ExperimentConfig, Instance, Noise, OracleMode, Polytope, RobustAlgo,
    Session, SolverConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn vector_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_err: f64 = 0.0;
    let mut failures = 0;
    let mut over_budget = 0;
    for d in 2..=8usize {
        for eps in [0.1, 0.01] {
            let cap = d as u64 * (16.0 * d as f64 / eps).log2().ceil() as u64;
            for _ in 0..1000 {
                let g: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let Some(unit) = normalized(&g) else { continue };
                let r = approx_unit_vector(|a| Ok(if dot(a, &g) >= 0.0 { 1 } else { -1 }), d, eps).unwrap();
                let err = dist2(&r.vector, &unit);
                worst_err = worst_err.max(err / eps);
                failures += usize::from(err > eps);
                over_budget += usize::from(r.queries > cap);
            }
        }
    }
    outcome(
        failures == 0 && over_budget == 0,
        format!("14000 trials, {failures} inaccurate, {over_budget} over the query cap, worst error/eps {worst_err:.3}"),
    )
}

/// Mixed grid of at least 1000 points in the box: every integer fiber times a
/// regular continuous grid.
fn mixed_grid(inst: &Instance) -> Vec<Vec<f64>> {
    let p = inst.params;
    let fibers = integer_fibers(p.n, p.radius).unwrap();
    let per_fiber = 1000usize.div_ceil(fibers.len());
    let mut k = 2usize;
    while k.pow(p.d as u32) < per_fiber {
        k += 1;
    }
    let axis: Vec<f64> = (0..k).map(|i| -p.radius + 2.0 * p.radius * (i as f64 + 0.5) / k as f64).collect();
    let mut out = Vec::new();
    for x in &fibers {
        for idx in 0..k.pow(p.d as u32) {
            let mut z: Vec<f64> = x.iter().map(|&v| v as f64).collect();
            let mut rest = idx;
            for _ in 0..p.d {
                z.push(axis[rest % k]);
                rest /= k;
            }
            out.push(z);
        }
    }
    out
}

fn approximate_cuts() -> Outcome {
    let eps = 0.05;
    let instances: Vec<Instance> = bundled_suite(6).into_iter().take(50).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut deep_cut, mut value_violations, mut seps, mut cuts, mut min_grid) = (0, 0, 0, 0, usize::MAX);
    for inst in &instances {
        let p = inst.params;
        let eps1 = eps / 6.0;
        let rho1 = eps1 * p.rho / (4.0 * p.lipschitz * p.radius);
        let grid = mixed_grid(inst);
        min_grid = min_grid.min(grid.len());
        let deep: Vec<&Vec<f64>> = grid.iter().filter(|z| deep_point_check(&inst.feasible, z, rho1)).collect();
        let fibers = integer_fibers(p.n, p.radius).unwrap();
        for _ in 0..16 {
            let mut z: Vec<f64> = fibers[rng.gen_range(0..fibers.len())].iter().map(|&v| v as f64).collect();
            z.extend((0..p.d).map(|_| rng.gen_range(-p.radius..=p.radius)));
            for mode in [ApproxMode::Bit, ApproxMode::Dir] {
                let mut oracle = Session::new(InstanceOracle::new(inst));
                if inst.feasible.contains(&z) {
                    let g = make_approx_value_cut(&mut oracle, &p, &z, eps1, mode).unwrap();
                    let fz = inst.eval(&z);
                    cuts += 1;
                    value_violations += grid
                        .iter()
                        .filter(|w| dot(&g, &sub(w, &z)) >= 0.0 && inst.eval(w) < fz - eps1 - 1e-12)
                        .count();
                } else {
                    let g = make_approx_separation(&mut oracle, &p, &z, rho1, mode).unwrap();
                    seps += 1;
                    deep_cut += deep.iter().filter(|w| dot(&g, &sub(w, &z)) > 1e-12).count();
                }
            }
        }
    }
    outcome(
        deep_cut == 0 && value_violations == 0 && min_grid >= 1000 && instances.len() == 50,
        format!(
            "{} instances, grid >= {min_grid}, {seps} separations / {cuts} value cuts, {deep_cut} deep points cut, {value_violations} value-cut violations",
            instances.len()
        ),
    )
}

fn solver_correctness() -> Outcome {
    let eps = 0.05;
    let suite = bundled_suite(2);
    let mut bad = Vec::new();
    let mut alphas: Vec<(OracleMode, f64)> = Vec::new();
    for mode in [OracleMode::Exact, OracleMode::Bit, OracleMode::Dir] {
        let mut alpha_min = f64::INFINITY;
        for inst in &suite {
            let r = solve(inst, &SolverConfig::new(eps, mode)).unwrap();
            let opt = inst.brute_force_opt().unwrap().value;
            let feasible = inst.is_feasible_point(&r.solution);
            if !feasible || r.value > opt + eps || r.iterations > r.budget {
                bad.push(format!("{}:{}", inst.label, mode.name()));
            }
            if let Some(a) = r.empirical_alpha {
                alpha_min = alpha_min.min(a);
            }
        }
        alphas.push((mode, alpha_min));
    }
    let alpha_text: Vec<String> = alphas.iter().map(|(m, a)| format!("{} {a:.3}", m.name())).collect();
    outcome(
        bad.is_empty(),
        format!("{} instances x 3 modes, failures {:?}, min empirical centerpoint constant: {}", suite.len(), bad, alpha_text.join(", ")),
    )
}

fn query_scaling() -> Outcome {
    let config = ExperimentConfig::from_json(
        r#"{"entry": "solver", "n": [0, 1, 2], "d": [1, 2, 3], "eps": [0.2, 0.05], "modes": ["dir"], "stop": "budget", "samples": 4000}"#,
    )
    .unwrap();
    let res = run_sweep(&config).unwrap();
    let Some(fit) = res.fits.first() else {
        return outcome(false, "no fit produced");
    };
    let exps: Vec<String> = fit
        .exponents
        .iter()
        .map(|e| format!("{} {:.2} vs {:.2} ({:.0}%)", e.term, e.fitted, e.theoretical, 100.0 * e.relative_error))
        .collect();
    outcome(
        res.all_ok() && fit.ok() && fit.exponents.len() == 2,
        format!(
            "{} cells, C = {:.2}, q/(C E) in [{:.2}, {:.2}], exponents {}",
            res.rows.len(),
            fit.constant,
            fit.ratio_min,
            fit.ratio_max,
            exps.join(", ")
        ),
    )
}

fn lower_bound_transfer() -> Outcome {
    let family = ny_hard_family(1, 1.0, 1.0, 0.05, 8).unwrap();
    let max_rounds = 300;
    let (ell, _) = measure_hardness(&family, &mut bundled_strategies(), max_rounds).unwrap();
    let mut strategies: Vec<Box<dyn Strategy>> = vec![Box::new(BisectStrategy)];
    strategies.extend((0..5).map(|seed| Box::new(RandomStrategy { seed }) as Box<dyn Strategy>));
    strategies.push(Box::new(CenterpointStrategy::default()));
    let mut runs = 0;
    let mut bad = Vec::new();
    let mut earliest = usize::MAX;
    for n in [1, 2] {
        let bound = transfer_bound(n, ell);
        for s in strategies.iter_mut() {
            let adv = Adversary::Mi(MiAdversary::new(&family, n, Some(ell), BitClass::Shifted).unwrap());
            let out = run_game(s.as_mut(), adv, family.eps, max_rounds).unwrap();
            runs += 1;
            earliest = earliest.min(out.stop_round);
            let consistent = verify_consistency(&out, &family, 100, n as u64);
            if out.stop_round < bound || consistent.is_err() {
                bad.push(format!("n={n} {} stop {} ({:?})", out.strategy, out.stop_round, consistent.err()));
            }
        }
    }
    outcome(
        ell >= 3 && bad.is_empty(),
        format!("hardness {ell}, {runs} games, earliest stop {earliest}, failures {bad:?}"),
    )
}

fn finite_halving() -> Outcome {
    let eps = 0.05;
    let mut trials = 0;
    let mut bad = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for k in 3..=7u32 {
        let size = 1usize << k;
        for t in 0..50u64 {
            let (n, d) = ((t % 3) as usize, 1 + (t % 2) as usize);
            let seed = 100 * k as u64 + t;
            let (family, truth) = halving_family(n, d, size, seed).unwrap();
            let mut w = ExactCenterpoint::new(&family[truth], eps, 2000, t).unwrap();
            let r = halving_solve(&family, truth, &mut w, eps).unwrap();
            trials += 1;
            worst_ratio = worst_ratio.max(r.binary_queries as f64 / r.query_bound);
            if r.binary_queries as f64 > r.query_bound || r.gap > eps || !r.retained {
                bad.push(format!("size {size} trial {t}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("{trials} trials over sizes 8..128, worst queries/bound {worst_ratio:.3}, failures {bad:?}"))
}

fn robustification() -> Outcome {
    let noise = Noise { eta_f: 5e-4, eta_g: 5e-4 };
    let mut runs = 0;
    let mut bad = Vec::new();
    let mut slack = f64::INFINITY;
    for inst in bundled_suite(2) {
        let mut algos = vec![(RobustAlgo::Centerpoint, 40)];
        if inst.params.n == 0 {
            algos.push((RobustAlgo::Subgradient, 60));
        }
        for (algo, rounds) in algos {
            let r = robustify(&inst, algo, noise, rounds, 0).unwrap();
            runs += 1;
            slack = slack.min(r.bound - r.noisy.gap);
            if !r.within_bound || !r.audit.ok() {
                bad.push(format!("{} {:?}", inst.label, r.algo));
            }
        }
    }
    let bodies = [
        ConvexBody::Ball { center: vec![0.2, -0.1], radius: 0.7 },
        ConvexBody::Ball { center: vec![0.0, 0.0, 0.0], radius: 0.9 },
        ConvexBody::Poly(Polytope::cube(2, 1.0).with(mico_core::Halfspace::new(vec![1.0, 1.0], 0.5).unwrap())),
    ];
    let mut excess = f64::NEG_INFINITY;
    let mut containment = 0;
    for (i, body) in bodies.iter().enumerate() {
        let a = projection_harness(body, 1.0, 1e-3, 100, 1000, i as u64);
        excess = excess.max(a.max_excess);
        containment += a.containment_failures;
    }
    outcome(
        bad.is_empty() && excess <= 1e-9 && containment == 0,
        format!(
            "{runs} wrapped runs, min bound slack {slack:.4}, failures {bad:?}; projection max dist-minus-bound {excess:.3e}, {containment} containment failures on 3x1000 samples"
        ),
    )
}

fn determinism() -> Outcome {
    let configs = [
        r#"{"entry": "solver", "n": [0, 1], "d": [1, 2], "eps": [0.2], "modes": ["exact", "bit", "dir"], "samples": 1500}"#,
        r#"{"entry": "game", "n": [1, 2], "modes": ["bisect", "random", "centerpoint"], "seeds": [0, 1]}"#,
        r#"{"entry": "halving", "sizes": [8, 32], "n": [1], "d": [1, 2], "eps": [0.05], "seeds": [0, 1]}"#,
    ];
    let mut diffs = Vec::new();
    for text in configs {
        let c = ExperimentConfig::from_json(text).unwrap();
        let a = run_sweep(&c).unwrap().to_csv().unwrap();
        let b = run_sweep(&c).unwrap().to_csv().unwrap();
        if a != b {
            diffs.push(format!("{:?} csv", c.entry));
        }
    }
    let mut transcripts = 0;
    for inst in bundled_suite(1).iter().take(6) {
        for mode in [OracleMode::Exact, OracleMode::Dir] {
            let cfg = SolverConfig::new(0.1, mode).with_samples(1500).with_seed(3);
            let (ra, ta) = solve_recorded(inst, &cfg).unwrap();
            let (rb, tb) = solve_recorded(inst, &cfg).unwrap();
            transcripts += 1;
            if ta.to_jsonl() != tb.to_jsonl() || serde_json::to_string(&ra).unwrap() != serde_json::to_string(&rb).unwrap() {
                diffs.push(format!("{} {} transcript", inst.label, mode.name()));
            }
        }
    }
    let family = ny_hard_family(1, 1.0, 1.0, 0.05, 8).unwrap();
    for seed in 0..3 {
        let game = || {
            let adv = Adversary::Mi(MiAdversary::new(&family, 2, None, BitClass::Shifted).unwrap());
            run_game(&mut RandomStrategy { seed }, adv, family.eps, 300).unwrap().transcript.to_jsonl()
        };
        transcripts += 1;
        if game() != game() {
            diffs.push(format!("game seed {seed} transcript"));
        }
    }
    let inst = &bundled_suite(1)[4];
    let robust = || serde_json::to_string(&robustify(inst, RobustAlgo::Centerpoint, Noise { eta_f: 5e-4, eta_g: 5e-4 }, 30, 9).unwrap()).unwrap();
    if robust() != robust() {
        diffs.push("robustify report".into());
    }
    outcome(diffs.is_empty(), format!("3 sweeps, {transcripts} transcripts and a robust report rerun; differences {diffs:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("vector recovery", vector_recovery),
        ("approximate-cut validity", approximate_cuts),
        ("solver correctness", solver_correctness),
        ("query scaling", query_scaling),
        ("lower-bound transfer", lower_bound_transfer),
        ("finite halving", finite_halving),
        ("robustification", robustification),
        ("determinism", determinism),
    ];
    let results: Vec<(Outcome, f64)> = criteria
        .iter()
        .map(|(_, f)| {
            let t = Instant::now();
            let o = std::panic::catch_unwind(f).unwrap_or_else(|_| outcome(false, "panicked"));
            (o, t.elapsed().as_secs_f64())
        })
        .collect();
    let mut failed = 0;
    for (i, ((name, _), (o, secs))) in criteria.iter().zip(&results).enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("[{}] {tag} {name} ({secs:.1}s): {}", i + 1, o.detail);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
