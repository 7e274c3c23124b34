//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails or overruns its time budget.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use hrnn_core::bench::bench_memory;
use hrnn_core::classical::{classical_unit_cell, leapfrog_unit_cell, ClassicalLatent};
use hrnn_core::contextuality::{
    commutator_norm, compute_r, stabilizer_product_direct, stabilizer_product_from_r, verify_magic_square,
    MagicSquare,
};
use hrnn_core::engine::{Engine, EngineConfig, EngineRegistry};
use hrnn_core::hsmt::{
    build_contextual_triple, build_sequence, min_len, mod2_labels, random_instance, random_mod2_pair,
    triple_from_pair, GenConfig,
};
use hrnn_core::lie::{closure_dimension_formula, lie_closure, structure_constants};
use hrnn_core::phase::{circular_distance, PROB_FLOOR};
use hrnn_core::types::{k_subsets_colex, Hyperedge, MeasurementRecord, Setting, Token, WeightedHypergraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TV_TOL: f64 = 1e-9;
const R_TOL: f64 = 1e-9;
const LEAPFROG_STEP: f64 = 1e-4;
const LEAPFROG_TOL: f64 = 1e-6;
const SLOPE_TOL: f64 = 0.1;
const MAX_LEAVES: usize = 1 << 20;

type Check = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Check);

fn engine(name: &str, n: usize, k: usize) -> Box<dyn Engine> {
    EngineRegistry::default().build(name, &EngineConfig::new(n, k)).expect("engine builds")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn magic_square() -> Check {
    let rep = verify_magic_square(&MagicSquare::mermin_peres());
    ensure(rep.is_contextual_pattern(), || format!("parities {:?}", rep.parities()))?;
    Ok(format!("parities {:?}, all lines commuting", rep.parities()))
}

/// Suffix distribution of one triple member, conditioned on its prefix.
fn suffix_dist(eng: &dyn Engine, tokens: &[Token], given: &MeasurementRecord) -> Vec<(Vec<f64>, f64)> {
    let cut = given.len();
    let dist = eng.enumerate(tokens, MAX_LEAVES).expect("enumerates");
    let positions: Vec<usize> = (cut..tokens.len()).collect();
    let cond = dist
        .conditional(&positions, |r| r.key()[..cut] == given.key()[..])
        .expect("prefix outputs have positive probability");
    cond.entries().iter().map(|(r, p)| (r.outcomes.iter().map(|o| o.value()).collect(), *p)).collect()
}

fn mass(d: &[(Vec<f64>, f64)], pred: impl Fn(&[f64]) -> bool) -> f64 {
    d.iter().filter(|(y, _)| pred(y)).map(|(_, p)| p).sum()
}

fn is_plus(x: f64) -> bool {
    circular_distance(x, 0.0) < 1e-7
}

fn n2_identities() -> Check {
    let triple = build_contextual_triple(2, 2, Setting::Qubit).map_err(|e| e.to_string())?;
    let eng = engine("dense", 2, 2);
    let dists: Vec<_> = triple
        .instances
        .iter()
        .zip(&triple.given)
        .map(|(inst, g)| suffix_dist(eng.as_ref(), &build_sequence(inst).expect("valid"), g))
        .collect();
    let p1 = mass(&dists[0], |y| is_plus(y[0]) && !is_plus(y[1]));
    let p2 = mass(&dists[1], |y| is_plus(y[0]) && is_plus(y[1]));
    let p3 = mass(&dists[2], |y| !is_plus(y[0]));
    for (name, p) in [("|++>: y3=+1,y4=-1", p1), ("CZ|++>: y3=+1,y4=+1", p2), ("|00>: y3=-1", p3)] {
        ensure(p < PROB_FLOOR, || format!("p({name}) = {p:e}"))?;
    }
    let cert = triple.certify(eng.as_ref(), MAX_LEAVES).map_err(|e| e.to_string())?;
    ensure(cert.pass, || format!("max triple product {:e}", cert.max_triple_product))?;
    Ok(format!("three identities hold, max triple product {}", cert.max_triple_product))
}

fn random_pair(rng: &mut ChaCha8Rng, n: usize, k: usize) -> (WeightedHypergraph, WeightedHypergraph) {
    let edges = k_subsets_colex(n, k);
    let target = rng.gen_range(0..edges.len());
    let mut w1 = Vec::new();
    let mut w2 = Vec::new();
    for (i, e) in edges.iter().enumerate() {
        let base = if rng.gen_bool(0.5) { rng.gen_range(-1.0..1.0) } else { rng.gen_range(-2i32..=2) as f64 };
        let other = if i == target {
            base + if rng.gen_bool(0.5) { 1.0 } else { -1.0 }
        } else if i < target || rng.gen_bool(0.5) {
            base
        } else {
            base + rng.gen_range(0.1..0.9)
        };
        w1.push((e.vertices().to_vec(), base));
        w2.push((e.vertices().to_vec(), other));
    }
    (
        WeightedHypergraph::from_entries(n, k, w1).expect("valid"),
        WeightedHypergraph::from_entries(n, k, w2).expect("valid"),
    )
}

fn antidistinguishing_at_scale() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e44a1);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let k = if rng.gen_bool(0.5) { 2 } else { 3 };
        let n = rng.gen_range(k..=5);
        let (psi1, psi2) = random_pair(&mut rng, n, k);
        let triple = triple_from_pair(&psi1, &psi2, Setting::Qubit).map_err(|e| format!("trial {trial}: {e}"))?;
        let (_, suffix) = triple.candidates().map_err(|e| e.to_string())?;
        ensure(suffix.len() == n - k + 2, || format!("trial {trial}: suffix length {}", suffix.len()))?;
        let cert = triple
            .certify(engine("hypergraph", n, k).as_ref(), MAX_LEAVES)
            .map_err(|e| format!("trial {trial}: {e}"))?;
        ensure(cert.pass, || format!("trial {trial} (n={n}, k={k}): max product {:e}", cert.max_triple_product))?;
        worst = worst.max(cert.max_triple_product);
    }
    Ok(format!("100 pairs certified, worst max product {worst}"))
}

fn mod2_correspondence() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let n = 2 + (seed as usize % 4);
        let (qb, qm) = random_mod2_pair(n, seed).map_err(|e| e.to_string())?;
        let a = engine("hypergraph", n, 2)
            .enumerate(&build_sequence(&qb).expect("valid"), MAX_LEAVES)
            .map_err(|e| e.to_string())?;
        let b = engine("qumode", n, 2)
            .enumerate(&build_sequence(&qm).expect("valid"), MAX_LEAVES)
            .map_err(|e| e.to_string())?;
        let la = a.map_records(|r| mod2_labels(&qb, r)).map_err(|e| e.to_string())?;
        let lb = b.map_records(|r| mod2_labels(&qm, r)).map_err(|e| e.to_string())?;
        let tv = la.tv_distance(&lb);
        ensure(tv < TV_TOL, || format!("seed {seed} (n={n}): TV {tv:e}"))?;
        worst = worst.max(tv);
    }
    Ok(format!("50 instance pairs, worst TV {worst:e}"))
}

fn engine_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe9);
    let mut worst = 0.0f64;
    for trial in 0..200u64 {
        let k = if rng.gen_bool(0.5) { 2 } else { 3 };
        let n = rng.gen_range(k..=6);
        let tail = rng.gen_range(0..=2);
        let mut inst = random_instance(&GenConfig::new(n, k, min_len(n, k) + tail), trial)
            .map_err(|e| e.to_string())?;
        for u in inst.upsilon.iter_mut() {
            match rng.gen_range(0..4) {
                0 => *u = 0.0,
                1 => *u = rng.gen_range(-PI..PI),
                _ => {}
            }
        }
        let toks = build_sequence(&inst).map_err(|e| e.to_string())?;
        let a = engine("hypergraph", n, k).enumerate(&toks, MAX_LEAVES).map_err(|e| format!("trial {trial}: {e}"))?;
        let b = engine("dense", n, k).enumerate(&toks, MAX_LEAVES).map_err(|e| format!("trial {trial}: {e}"))?;
        let tv = a.tv_distance(&b);
        ensure(tv < TV_TOL, || format!("trial {trial} (n={n}, k={k}): TV {tv:e}"))?;
        worst = worst.max(tv);
    }
    Ok(format!("200 sequences, worst TV {worst:e}"))
}

fn r_polynomial() -> Check {
    let mut worst = 0.0f64;
    for k in 1..=3 {
        for setting in [Setting::Qubit, Setting::Qumode] {
            let r = compute_r(k, setting).map_err(|e| e.to_string())?;
            ensure(r.constant == 1, || format!("k={k} {setting:?}: constant {}", r.constant))?;
        }
        let r = compute_r(k, Setting::Qubit).map_err(|e| e.to_string())?;
        for e in [0.0, 1.0, 2.0, 0.5] {
            let err = (stabilizer_product_from_r(&r, k, e) - stabilizer_product_direct(k, e)).norm();
            ensure(err < R_TOL, || format!("k={k}, e={e}: reconstruction error {err:e}"))?;
            worst = worst.max(err);
            let c = commutator_norm(&r, k, e);
            if e.fract() == 0.0 {
                ensure(c < R_TOL, || format!("k={k}, e={e}: commutator {c:e}"))?;
            } else {
                ensure(c > 1e-3, || format!("k={k}, e={e}: commutator unexpectedly {c:e}"))?;
            }
        }
    }
    Ok(format!("k ≤ 3, worst reconstruction error {worst:e}"))
}

fn lie_dimension() -> Check {
    let mut checked = 0;
    for n in 1..=10 {
        for k in 1..=n.min(4) {
            let cl = lie_closure(n, k).map_err(|e| e.to_string())?;
            let want = closure_dimension_formula(n, k);
            ensure(cl.dim() == want, || format!("n={n}, k={k}: dim {} vs {want}", cl.dim()))?;
            let sc = structure_constants(&cl).map_err(|e| e.to_string())?;
            ensure(sc.is_antisymmetric(), || format!("n={n}, k={k}: not antisymmetric"))?;
            if let Some(t) = sc.jacobi_check(30, 10_000, (n * 16 + k) as u64) {
                return Err(format!("n={n}, k={k}: Jacobi fails at {t:?}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (n, k) pairs match n + Σ C(n,j), Jacobi exact"))
}

fn memory_scaling() -> Check {
    let rep = bench_memory(2, &[8, 16, 32, 64], 2024).map_err(|e| e.to_string())?;
    for r in &rep.rows {
        ensure(r.within_bound, || format!("n={}: peak {} > bound {}", r.n, r.peak_entries, r.bound))?;
    }
    ensure((rep.slope - 2.0).abs() <= SLOPE_TOL, || format!("slope {}", rep.slope))?;
    let peaks: Vec<_> = rep.rows.iter().map(|r| (r.n, r.peak_entries, r.bound)).collect();
    Ok(format!("(n, peak, bound) {peaks:?}, slope {:.4}", rep.slope))
}

fn random_token(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Token {
    let pick = |rng: &mut ChaCha8Rng, m: usize| {
        let mut v: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = rng.gen_range(i..n);
            v.swap(i, j);
        }
        Hyperedge::new(v[..m].iter().copied()).expect("distinct")
    };
    let alpha = pick(rng, k);
    let m = rng.gen_range(1..=k);
    let beta = pick(rng, m);
    let mut theta = BTreeMap::new();
    for _ in 0..rng.gen_range(0..=3) {
        let w: Vec<usize> = beta.vertices().iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
        theta.insert(w, rng.gen_range(-1.0..1.0));
    }
    let phi = (0..beta.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Token { alpha: Some(alpha), gamma: rng.gen_range(-1.0..1.0), ..Token::measure(beta, phi, theta) }
}

fn latent_vec(l: &ClassicalLatent) -> Vec<f64> {
    l.q.iter().chain(&l.p).copied().collect()
}

fn classical_limit() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc1a55);
    let mut worst = 0.0f64;
    let mut worst_diff = 0.0f64;
    for trial in 0..100 {
        let n = rng.gen_range(2..=5);
        let k = rng.gen_range(2..=n.min(3));
        let tok = random_token(&mut rng, n, k);
        let rand_vec = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let lat = ClassicalLatent::new(rand_vec(&mut rng), rand_vec(&mut rng)).map_err(|e| e.to_string())?;
        let (a, ya) = classical_unit_cell(&lat, &tok).map_err(|e| e.to_string())?;
        let (b, yb) = leapfrog_unit_cell(&lat, &tok, LEAPFROG_STEP).map_err(|e| e.to_string())?;
        let dev = latent_vec(&a)
            .iter()
            .zip(latent_vec(&b))
            .map(|(x, y)| (x - y).abs())
            .fold((ya - yb).abs(), f64::max);
        ensure(dev < LEAPFROG_TOL, || format!("trial {trial}: deviation {dev:e}"))?;
        worst = worst.max(dev);

        // k-th finite difference along a random line vanishes for degree ≤ k-1
        let (dq, dp) = (rand_vec(&mut rng), rand_vec(&mut rng));
        let samples: Vec<Vec<f64>> = (0..=k)
            .map(|s| {
                let s = s as f64;
                let q = lat.q.iter().zip(&dq).map(|(x, d)| x + s * d).collect();
                let p = lat.p.iter().zip(&dp).map(|(x, d)| x + s * d).collect();
                latent_vec(&classical_unit_cell(&ClassicalLatent { q, p }, &tok).expect("valid").0)
            })
            .collect();
        let mut diffs = samples;
        for _ in 0..k {
            diffs = diffs.windows(2).map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect()).collect();
        }
        let d = diffs[0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        ensure(d < 1e-9, || format!("trial {trial}: k-th difference {d:e}"))?;
        worst_diff = worst_diff.max(d);
    }
    Ok(format!("100 tokens, worst deviation {worst:e}, worst k-th difference {worst_diff:e}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 magic square parities", 1, magic_square),
        ("2 two-qubit zero-probability identities", 1, n2_identities),
        ("3 antidistinguishing sequences at scale", 60, antidistinguishing_at_scale),
        ("4 qumode/qubit mod-2 correspondence", 60, mod2_correspondence),
        ("5 hypergraph engine vs dense oracle", 300, engine_equivalence),
        ("6 R polynomial", 10, r_polynomial),
        ("7 Lie closure dimension", 30, lie_dimension),
        ("8 memory scaling", 120, memory_scaling),
        ("9 classical limit", 30, classical_limit),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        match (&outcome, over) {
            (Ok(detail), false) => {
                println!("PASS criterion {name}: {detail} [{elapsed:.2?} / {budget} s]");
            }
            (Ok(detail), true) => {
                failed += 1;
                println!("FAIL criterion {name}: over budget ({detail}) [{elapsed:.2?} / {budget} s]");
            }
            (Err(why), _) => {
                failed += 1;
                println!("FAIL criterion {name}: {why} [{elapsed:.2?} / {budget} s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
