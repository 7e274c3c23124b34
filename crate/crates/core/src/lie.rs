//! Commutator closure of the momentum and position-monomial generators.
//!
//! Elements are real combinations of `p_i` and `q_S = ∏_{j∈S} q_j` (with
//! `q_∅` the identity). Brackets are written `[a, b] = i·Σ_c f_ab^c c`, so
//! only the real structure constants `f` are stored. With `ħ = 1/2`,
//! `[p_i, q_S] = (i/2) q_{S∖i}` for `i ∈ S`.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::{binomial, k_subsets_colex};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Monomial {
    Momentum(usize),
    /// `∏_{j∈S} q_j`; the empty set is the identity.
    Position(Vec<usize>),
}

impl std::fmt::Display for Monomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Monomial::Momentum(i) => write!(f, "p{}", i + 1),
            Monomial::Position(s) if s.is_empty() => write!(f, "I"),
            Monomial::Position(s) => {
                for v in s {
                    write!(f, "q{}", v + 1)?;
                }
                Ok(())
            }
        }
    }
}

/// Sparse rational combination of monomials.
pub type Element = BTreeMap<Monomial, Rational64>;

fn add_scaled(acc: &mut Element, m: Monomial, c: Rational64) {
    let slot = acc.entry(m.clone()).or_insert_with(Rational64::zero);
    *slot += c;
    if slot.is_zero() {
        acc.remove(&m);
    }
}

/// `f` with `[a, b] = i·f` for two monomials.
fn bracket_monomials(a: &Monomial, b: &Monomial) -> Element {
    let half = Rational64::new(1, 2);
    let mut out = Element::new();
    match (a, b) {
        (Monomial::Momentum(i), Monomial::Position(s)) if s.contains(i) => {
            out.insert(Monomial::Position(s.iter().copied().filter(|j| j != i).collect()), half);
        }
        (Monomial::Position(s), Monomial::Momentum(i)) if s.contains(i) => {
            out.insert(Monomial::Position(s.iter().copied().filter(|j| j != i).collect()), -half);
        }
        _ => {}
    }
    out
}

pub fn bracket(a: &Element, b: &Element) -> Element {
    let mut out = Element::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            for (m, c) in bracket_monomials(ma, mb) {
                add_scaled(&mut out, m, c * ca * cb);
            }
        }
    }
    out
}

/// Fully reduced row-echelon basis keyed by pivot monomial.
#[derive(Clone, Debug, Default)]
struct Echelon {
    rows: BTreeMap<Monomial, Element>,
}

impl Echelon {
    fn reduce(&self, v: &Element) -> Element {
        let mut r = v.clone();
        for (pivot, row) in &self.rows {
            if let Some(c) = r.get(pivot).copied() {
                for (m, x) in row {
                    add_scaled(&mut r, m.clone(), -c * x);
                }
            }
        }
        r
    }

    /// Adds `v` if independent; returns whether it was added.
    fn insert(&mut self, v: &Element) -> bool {
        let r = self.reduce(v);
        let Some((pivot, lead)) = r.iter().next().map(|(m, c)| (m.clone(), *c)) else {
            return false;
        };
        let row: Element = r.into_iter().map(|(m, c)| (m, c / lead)).collect();
        for other in self.rows.values_mut() {
            if let Some(c) = other.get(&pivot).copied() {
                for (m, x) in &row {
                    add_scaled(other, m.clone(), -c * x);
                }
            }
        }
        self.rows.insert(pivot, row);
        true
    }

    /// Coordinates of `v` in the row basis, if it lies in the span.
    fn coordinates(&self, v: &Element) -> Option<Vec<(usize, Rational64)>> {
        let mut rest = v.clone();
        let mut coords = Vec::new();
        for (idx, (pivot, row)) in self.rows.iter().enumerate() {
            if let Some(c) = rest.get(pivot).copied() {
                coords.push((idx, c));
                for (m, x) in row {
                    add_scaled(&mut rest, m.clone(), -c * x);
                }
            }
        }
        rest.is_empty().then_some(coords)
    }
}

#[derive(Clone, Debug)]
pub struct LieClosure {
    pub n: usize,
    pub k: usize,
    pub basis: Vec<Element>,
    echelon: Echelon,
}

impl LieClosure {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// The generators `p_i` and `q_S` with `|S| = k`.
pub fn generators(n: usize, k: usize) -> Vec<Element> {
    let mut out: Vec<Element> = (0..n)
        .map(|i| [(Monomial::Momentum(i), Rational64::one())].into_iter().collect())
        .collect();
    for e in k_subsets_colex(n, k) {
        out.push([(Monomial::Position(e.vertices().to_vec()), Rational64::one())].into_iter().collect());
    }
    out
}

/// `n + Σ_{j=0}^{k} C(n, j)`, counting the identity.
pub fn closure_dimension_formula(n: usize, k: usize) -> usize {
    n + (0..=k).map(|j| binomial(n, j)).sum::<usize>()
}

/// Brackets pairs of spanning elements until no new direction appears.
pub fn lie_closure(n: usize, k: usize) -> Result<LieClosure> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got n = {n}, k = {k}")));
    }
    let mut echelon = Echelon::default();
    let mut span: Vec<Element> = Vec::new();
    for g in generators(n, k) {
        if echelon.insert(&g) {
            span.push(g);
        }
    }
    let mut i = 0;
    while i < span.len() {
        for j in 0..i {
            let c = bracket(&span[j], &span[i]);
            if !c.is_empty() && echelon.insert(&c) {
                span.push(c);
            }
        }
        i += 1;
    }
    let basis = echelon.rows.values().cloned().collect();
    Ok(LieClosure { n, k, basis, echelon })
}

/// Sparse structure constants: `entries[(a, b)] = [(c, f_ab^c)]`.
#[derive(Clone, Debug)]
pub struct StructureConstants {
    pub dim: usize,
    pub entries: BTreeMap<(usize, usize), Vec<(usize, Rational64)>>,
}

pub fn structure_constants(cl: &LieClosure) -> Result<StructureConstants> {
    let dim = cl.dim();
    let mut entries = BTreeMap::new();
    for a in 0..dim {
        for b in 0..dim {
            let c = bracket(&cl.basis[a], &cl.basis[b]);
            if c.is_empty() {
                continue;
            }
            let coords = cl.echelon.coordinates(&c).ok_or_else(|| {
                Error::NotClosed(format!("bracket of basis elements {a} and {b} leaves the span"))
            })?;
            entries.insert((a, b), coords);
        }
    }
    Ok(StructureConstants { dim, entries })
}

impl StructureConstants {
    fn get(&self, a: usize, b: usize) -> &[(usize, Rational64)] {
        self.entries.get(&(a, b)).map_or(&[], Vec::as_slice)
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.entries.iter().all(|((a, b), v)| {
            let mut w: Vec<_> = self.get(*b, *a).iter().map(|(c, x)| (*c, -x)).collect();
            w.sort();
            let mut v = v.clone();
            v.sort();
            v == w
        })
    }

    /// `Σ_d (f_ab^d f_dc^e + f_bc^d f_da^e + f_ca^d f_db^e)` for all `e`.
    fn jacobi_residual(&self, a: usize, b: usize, c: usize) -> BTreeMap<usize, Rational64> {
        let mut acc: BTreeMap<usize, Rational64> = BTreeMap::new();
        for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
            for (d, f1) in self.get(x, y) {
                for (e, f2) in self.get(*d, z) {
                    *acc.entry(*e).or_insert_with(Rational64::zero) += f1 * f2;
                }
            }
        }
        acc.retain(|_, v| !v.is_zero());
        acc
    }

    /// Exhaustive over all triples up to `exhaustive_dim`, otherwise
    /// `samples` random triples. Returns the first failing triple.
    pub fn jacobi_check(&self, exhaustive_dim: usize, samples: usize, seed: u64) -> Option<(usize, usize, usize)> {
        if self.dim <= exhaustive_dim {
            for a in 0..self.dim {
                for b in 0..self.dim {
                    for c in 0..self.dim {
                        if !self.jacobi_residual(a, b, c).is_empty() {
                            return Some((a, b, c));
                        }
                    }
                }
            }
            return None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples).find_map(|_| {
            let (a, b, c) = (rng.gen_range(0..self.dim), rng.gen_range(0..self.dim), rng.gen_range(0..self.dim));
            (!self.jacobi_residual(a, b, c).is_empty()).then_some((a, b, c))
        })
    }
}

#[derive(Serialize)]
struct JsonEntry {
    a: usize,
    b: usize,
    c: usize,
    /// `[numerator, denominator]`
    f: [i64; 2],
}

#[derive(Serialize)]
struct JsonStructure {
    n: usize,
    k: usize,
    dim: usize,
    basis: Vec<String>,
    constants: Vec<JsonEntry>,
}

fn element_label(e: &Element) -> String {
    let mut parts = Vec::new();
    for (m, c) in e {
        if c.is_one() {
            parts.push(m.to_string());
        } else {
            parts.push(format!("{c}*{m}"));
        }
    }
    parts.join("+")
}

pub fn structure_json(cl: &LieClosure, sc: &StructureConstants) -> String {
    let js = JsonStructure {
        n: cl.n,
        k: cl.k,
        dim: sc.dim,
        basis: cl.basis.iter().map(element_label).collect(),
        constants: sc
            .entries
            .iter()
            .flat_map(|((a, b), v)| {
                v.iter().map(move |(c, f)| JsonEntry { a: *a, b: *b, c: *c, f: [*f.numer(), *f.denom()] })
            })
            .collect(),
    };
    serde_json::to_string(&js).expect("structure serializes")
}

/// The monomials spanning the closure, for cross-checking.
pub fn monomial_support(cl: &LieClosure) -> BTreeSet<Monomial> {
    cl.basis.iter().flat_map(|e| e.keys().cloned()).collect()
}
