use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use hrnn_core::contextuality::PauliString;
use hrnn_core::engine::{Engine, EngineConfig, EngineRegistry};
use hrnn_core::hsmt::{bubble_wrap, build_sequence, min_len, random_instance, validate_translation, GenConfig, HsmtInstance};
use hrnn_core::hypergraph::HypergraphLatent;
use hrnn_core::io::{tokens_from_jsonl, tokens_to_jsonl};
use hrnn_core::qumode::{qumode_g_unitary, LatticeState};
use hrnn_core::statevector::{build_g_unitary, DenseState, ProjectorConvention};
use hrnn_core::types::{canonicalize, poly_eval, Hyperedge, MultilinearPoly, Outcome, Setting, WeightedHypergraph};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn subset(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=k)
}

fn entries(n: usize, k: usize) -> impl Strategy<Value = Vec<(Vec<usize>, f64)>> {
    proptest::collection::vec(
        (subset(n, k), prop_oneof![Just(0.0), -2.0..2.0f64]),
        0..12,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn canonicalize_is_idempotent_and_order_insensitive(mut es in entries(6, 3), seed in any::<u64>()) {
        let g = WeightedHypergraph::from_entries(6, 3, es.clone()).unwrap();
        let again = canonicalize(&g).unwrap();
        prop_assert_eq!(&again, &g);
        prop_assert!(g.iter().all(|(_, w)| w != 0.0));
        // reversing key order and shuffling entries gives the same graph
        let r = seed as usize % (es.len() + 1);
        es.rotate_left(r);
        let rev: Vec<_> = es.into_iter().rev().map(|(mut v, w)| { v.reverse(); (v, w) }).collect();
        let h = WeightedHypergraph::from_entries(6, 3, rev).unwrap();
        prop_assert_eq!(h.len(), g.len());
        for (e, w) in g.iter() {
            prop_assert!((h.weight(e) - w).abs() < 1e-12);
        }
    }

    #[test]
    fn bubble_wrap_is_periodic(x in -1e3..1e3f64) {
        let a = bubble_wrap(x).unwrap();
        let b = bubble_wrap(x + 2.0 * PI).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn poly_eval_matches_term_sum(
        terms in proptest::collection::vec((subset(5, 3), -5i64..5), 0..8),
        c in -3i64..3,
        bits in proptest::collection::vec(any::<bool>(), 5),
    ) {
        let mut p = MultilinearPoly::constant(c);
        for (v, x) in &terms {
            p.add_term(v.clone(), *x);
        }
        let direct: i64 = c + terms
            .iter()
            .map(|(v, x)| if v.iter().all(|&i| bits[i]) { *x } else { 0 })
            .sum::<i64>();
        prop_assert_eq!(poly_eval(&p, &bits), direct);
    }

    #[test]
    fn pauli_product_matches_matrices(
        n in 1usize..=4,
        xs in proptest::collection::vec(any::<u64>(), 3),
        zs in proptest::collection::vec(any::<u64>(), 3),
        ph in proptest::collection::vec(0u8..4, 3),
    ) {
        let mask = (1u64 << n) - 1;
        let ps: Vec<PauliString> = (0..3)
            .map(|i| PauliString { n, x: xs[i] & mask, z: zs[i] & mask, phase: ph[i] })
            .collect();
        let left = ps[0].mul(&ps[1]).mul(&ps[2]);
        let right = ps[0].mul(&ps[1].mul(&ps[2]));
        prop_assert_eq!(left, right);
        let dense = ps[0].to_matrix() * ps[1].to_matrix() * ps[2].to_matrix();
        prop_assert!((left.to_matrix() - &dense).norm() < 1e-12);
        let comm = ps[0].to_matrix() * ps[1].to_matrix() - ps[1].to_matrix() * ps[0].to_matrix();
        prop_assert_eq!(ps[0].commutes_with(&ps[1]), comm.norm() < 1e-12);
    }
}

fn prepared_latent(n: usize, edges: &[(Vec<usize>, f64)]) -> HypergraphLatent {
    let mut s = HypergraphLatent::new(n);
    for q in 0..n {
        s = s
            .prep_branches(q, -FRAC_PI_4)
            .unwrap()
            .into_iter()
            .find(|(ph, _, _)| (ph - FRAC_PI_4).abs() < 1e-12)
            .unwrap()
            .2;
    }
    for (e, w) in edges {
        s.apply_ckz(&Hyperedge::new(e.iter().copied()).unwrap(), *w).unwrap();
    }
    s
}

/// Amplitudes with site `q` fixed to `m`, in the order of the remaining sites.
fn slice(state: &DenseState, q: usize, m: usize) -> Vec<C64> {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(x, _)| state.digit(*x, q) == m)
        .map(|(_, a)| *a)
        .collect()
}

fn overlap(a: &[C64], b: &[C64]) -> f64 {
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm() / (na * nb)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn qubit_contraction_is_sound(
        n in 2usize..=6,
        es in proptest::collection::vec((subset(6, 3), -2.0..2.0f64), 0..10),
        qsel in any::<usize>(),
    ) {
        let es: Vec<_> = es.into_iter().filter(|(e, _)| e.iter().all(|&v| v < n)).collect();
        let s = prepared_latent(n, &es);
        let q = qsel % n;
        let full = s.dense_handoff(n).unwrap().state;
        for (m, p, post) in s.measure_z(q).unwrap() {
            let want = slice(&full, q, m as usize);
            let pw: f64 = want.iter().map(|x| x.norm_sqr()).sum();
            prop_assert!((p - pw).abs() < 1e-10);
            let res = post.dense_handoff(n - 1).unwrap();
            prop_assert_eq!(res.live_qubits.len(), n - 1);
            prop_assert!((overlap(&want, res.state.amplitudes()) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn qumode_contraction_is_sound(
        n in 2usize..=4,
        d in 1i64..=2,
        es in proptest::collection::vec((subset(4, 3), -4i64..4), 0..6),
        qsel in any::<usize>(),
    ) {
        let mut s = LatticeState::new(n, d).unwrap();
        for m in 0..n {
            s = s.prep_gkp(m, 1.0).unwrap().into_iter().find(|b| b.0 == 0.0).unwrap().2;
        }
        for (e, a) in es.iter().filter(|(e, _)| e.iter().all(|&v| v < n)) {
            s.apply_cv_ckz(&Hyperedge::new(e.iter().copied()).unwrap(), *a as f64 / d as f64).unwrap();
        }
        let q = qsel % n;
        let mut whole = s.clone();
        whole.expand(n).unwrap();
        let full = whole.residual().unwrap().1.clone();
        let branches = s.measure_q(q).unwrap();
        let total: f64 = branches.iter().map(|b| b.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        for (r, p, mut post) in branches {
            let want = slice(&full, q, r as usize);
            let pw: f64 = want.iter().map(|x| x.norm_sqr()).sum();
            prop_assert!((p - pw).abs() < 1e-10);
            post.expand(n - 1).unwrap();
            prop_assert!((overlap(&want, post.residual().unwrap().1.amplitudes()) - 1.0).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn instance_json_round_trips(n in 2usize..=6, kk in 1usize..=3, tail in 0usize..3, seed in any::<u64>(), qumode in any::<bool>()) {
        let k = kk.min(n);
        let mut cfg = GenConfig::new(n, k, min_len(n, k) + tail);
        if qumode {
            cfg.setting = Setting::Qumode;
            cfg.denominator = 2;
        }
        let inst = random_instance(&cfg, seed).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: HsmtInstance = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
        let toks = build_sequence(&inst).unwrap();
        let jl = tokens_to_jsonl(&toks);
        prop_assert_eq!(tokens_from_jsonl(&jl).unwrap(), toks.clone());
        prop_assert_eq!(build_sequence(&back).unwrap(), toks);
    }
}

fn registry_engine(name: &str, cfg: &EngineConfig) -> Box<dyn Engine> {
    EngineRegistry::default().build(name, cfg).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn translations_accept_samples_and_reject_corruption(
        n in 2usize..=5,
        kk in 2usize..=3,
        tail in 0usize..3,
        seed in any::<u64>(),
        qumode in any::<bool>(),
        pos in any::<usize>(),
    ) {
        let k = kk.min(n);
        let mut cfg = GenConfig::new(n, k, min_len(n, k) + tail);
        let name = if qumode {
            cfg.setting = Setting::Qumode;
            "qumode"
        } else {
            "hypergraph"
        };
        let inst = random_instance(&cfg, seed).unwrap();
        let eng = registry_engine(name, &EngineConfig::new(n, k));
        let toks = build_sequence(&inst).unwrap();
        let y = eng.sample(&toks, seed, 0).unwrap();
        prop_assert!(validate_translation(&inst, &y, eng.as_ref()).unwrap());
        let i = pos % y.len();
        let mut bad = y.clone();
        bad.outcomes[i] = Outcome::Phase(y.outcomes[i].value() + 0.37);
        prop_assert!(!validate_translation(&inst, &bad, eng.as_ref()).unwrap());
        // a recap output that disagrees with its prep
        let mut swapped = y.clone();
        let r = inst.blocks().recap.start + pos % n;
        swapped.outcomes[r] = Outcome::Phase(y.outcomes[r].value() - 0.37);
        prop_assert!(!validate_translation(&inst, &swapped, eng.as_ref()).unwrap());
    }
}

fn theta_on(beta: &[usize], raw: &[(u8, f64)]) -> BTreeMap<Vec<usize>, f64> {
    raw.iter()
        .map(|&(mask, t)| {
            let w: Vec<usize> = beta.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, &v)| v).collect();
            (w, t)
        })
        .collect()
}

fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    (u.adjoint() * u - DMatrix::<C64>::identity(u.nrows(), u.ncols())).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn qubit_g_is_unitary(
        beta in subset(5, 3),
        phi in proptest::collection::vec(-4.0..4.0f64, 3),
        raw in proptest::collection::vec((0u8..8, -4.0..4.0f64), 0..5),
    ) {
        let edge = Hyperedge::new(beta.iter().copied()).unwrap();
        let th = theta_on(&beta, &raw);
        let u = build_g_unitary(&edge, &phi[..beta.len()], &th).unwrap();
        prop_assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn qumode_g_is_unitary(
        beta in subset(4, 2),
        d in 1i64..=3,
        shifts in proptest::collection::vec(-3i64..3, 2),
        raw in proptest::collection::vec((0u8..4, -6i64..6), 0..4),
    ) {
        let edge = Hyperedge::new(beta.iter().copied()).unwrap();
        let phi: Vec<f64> = shifts[..beta.len()].iter().map(|&s| 2.0 * s as f64).collect();
        let raw: Vec<(u8, f64)> = raw.into_iter().map(|(m, a)| (m, PI * a as f64 / d as f64)).collect();
        let th = theta_on(&beta, &raw);
        let u = qumode_g_unitary(&edge, &phi, &th, d).unwrap();
        prop_assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn gates_and_measurements_preserve_norm(
        n in 1usize..=5,
        es in proptest::collection::vec((subset(5, 3), -3.0..3.0f64), 0..8),
        zeros in any::<bool>(),
    ) {
        let conv = if zeros { ProjectorConvention::Zeros } else { ProjectorConvention::Ones };
        let amp = C64::new(1.0 / (1usize << n) as f64, 0.0).sqrt();
        let mut s = DenseState::from_amplitudes(n, 2, vec![amp; 1 << n]).unwrap();
        for (e, g) in es.iter().filter(|(e, _)| e.iter().all(|&v| v < n)) {
            s.apply_ckz(&Hyperedge::new(e.iter().copied()).unwrap(), *g, conv).unwrap();
            prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        }
        let total: f64 = (0..2).map(|m| slice(&s, 0, m).iter().map(|a| a.norm_sqr()).sum::<f64>()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }
}
