//! Shared domain types.
//!
//! Vertex indices are 0-based everywhere inside the crate. The JSON layer in
//! [`crate::io`] converts to and from the 1-based form used in files.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::{is_trivial_phase, phase_key, PROB_FLOOR};

/// A non-empty, strictly increasing set of distinct vertex indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hyperedge(Vec<usize>);

impl Hyperedge {
    /// Builds a hyperedge from vertices in any order. Duplicates and empty
    /// sets are rejected.
    pub fn new(vertices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = vertices.into_iter().collect();
        if v.is_empty() {
            return Err(Error::Structure("hyperedge must be non-empty".into()));
        }
        v.sort_unstable();
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Structure(format!("repeated vertex in {v:?}")));
        }
        Ok(Hyperedge(v))
    }

    /// Builds a hyperedge from 1-based vertex labels.
    pub fn from_one_based(labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::Structure("vertex labels are 1-based".into()));
        }
        Self::new(labels.iter().map(|l| l - 1))
    }

    pub fn single(v: usize) -> Self {
        Hyperedge(vec![v])
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    /// The edge with `v` removed, or `None` if nothing is left.
    pub fn without(&self, v: usize) -> Option<Hyperedge> {
        let rest: Vec<usize> = self.0.iter().copied().filter(|&x| x != v).collect();
        (!rest.is_empty()).then_some(Hyperedge(rest))
    }

    pub fn check_range(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&m) if m >= n => Err(Error::OutOfRange { index: m, n }),
            _ => Ok(()),
        }
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|v| v + 1).collect()
    }

    /// Position of `v` inside the edge.
    pub fn position(&self, v: usize) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }
}

impl fmt::Display for Hyperedge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", v + 1)?;
        }
        write!(f, "}}")
    }
}

/// Sorts a vertex subset and rejects repeats. The empty subset is allowed.
pub fn normalize_subset(mut s: Vec<usize>) -> Result<Vec<usize>> {
    s.sort_unstable();
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Structure(format!("repeated vertex in {s:?}")));
    }
    Ok(s)
}

/// Number of `k`-subsets of an `n`-set.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `C(n,1) + … + C(n,k)`: the most hyperedges a `k`-bounded graph can hold.
pub fn edge_capacity(n: usize, k: usize) -> usize {
    (1..=k).map(|j| binomial(n, j)).sum()
}

/// All `k`-subsets of `0..n` in colexicographic order.
pub fn k_subsets_colex(n: usize, k: usize) -> Vec<Hyperedge> {
    let mut out = Vec::with_capacity(binomial(n, k));
    if k == 0 || k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(Hyperedge(c.clone()));
        // advance to the next combination in colex order
        let mut i = 0;
        while i + 1 < k && c[i] + 1 == c[i + 1] {
            i += 1;
        }
        if i + 1 == k && c[i] + 1 == n {
            break;
        }
        c[i] += 1;
        for (j, slot) in c.iter_mut().enumerate().take(i) {
            *slot = j;
        }
    }
    out
}

/// Sparse map from hyperedges to real weights.
///
/// Weights are in units of π: an edge `S` with weight `e` contributes the
/// phase `exp(iπ e ∏_{j∈S} n_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedHypergraph {
    n: usize,
    k: usize,
    weights: BTreeMap<Hyperedge, f64>,
}

impl WeightedHypergraph {
    pub fn new(n: usize, k: usize) -> Self {
        WeightedHypergraph { n, k, weights: BTreeMap::new() }
    }

    /// Builds a graph from `(vertices, weight)` pairs. Keys are sorted, repeated
    /// keys are summed and the result is canonicalized.
    pub fn from_entries<I>(n: usize, k: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut g = WeightedHypergraph::new(n, k);
        for (verts, w) in entries {
            let e = Hyperedge::new(verts)?;
            *g.weights.entry(e).or_insert(0.0) += w;
        }
        g.canonicalize()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weight(&self, e: &Hyperedge) -> f64 {
        self.weights.get(e).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Hyperedge, f64)> {
        self.weights.iter().map(|(e, w)| (e, *w))
    }

    /// Adds `w` to the weight of `e`, dropping the entry when it reaches zero.
    /// No cardinality check is made here; see [`Self::canonicalize`].
    pub fn add_weight(&mut self, e: Hyperedge, w: f64) {
        let slot = self.weights.entry(e.clone()).or_insert(0.0);
        *slot += w;
        if *slot == 0.0 {
            self.weights.remove(&e);
        }
    }

    pub fn set_weight(&mut self, e: Hyperedge, w: f64) {
        if w == 0.0 {
            self.weights.remove(&e);
        } else {
            self.weights.insert(e, w);
        }
    }

    pub fn remove(&mut self, e: &Hyperedge) -> Option<f64> {
        self.weights.remove(e)
    }

    /// Edges containing vertex `v`.
    pub fn edges_containing(&self, v: usize) -> Vec<(Hyperedge, f64)> {
        self.weights
            .iter()
            .filter(|(e, _)| e.contains(v))
            .map(|(e, w)| (e.clone(), *w))
            .collect()
    }

    /// Prunes zero weights and checks every key against `n` and `k`.
    pub fn canonicalize(&self) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (e, &w) in &self.weights {
            if e.len() > self.k {
                return Err(Error::Structure(format!(
                    "edge {e} has cardinality {} > k = {}",
                    e.len(),
                    self.k
                )));
            }
            e.check_range(self.n)?;
            if w != 0.0 {
                weights.insert(e.clone(), w);
            }
        }
        Ok(WeightedHypergraph { n: self.n, k: self.k, weights })
    }

    /// Phase polynomial `Σ_S e_S ∏_{j∈S} x_j` at a 0/1 point, in units of π.
    pub fn phase_at(&self, bits: &[bool]) -> f64 {
        self.weights
            .iter()
            .filter(|(e, _)| e.vertices().iter().all(|&v| bits[v]))
            .map(|(_, w)| w)
            .sum()
    }
}

/// Free function form of [`WeightedHypergraph::canonicalize`].
pub fn canonicalize(h: &WeightedHypergraph) -> Result<WeightedHypergraph> {
    h.canonicalize()
}

/// One input token `(α, β, γ, φ, θ)` of a hypergraph recurrent network.
///
/// * `alpha`: support of the multi-controlled phase gate, `gamma` its angle
///   in radians.
/// * `beta`: support of the measured operator `G`, with `phi` indexed by the
///   position inside `beta` and `theta` keyed by (possibly empty) subsets of
///   `beta`.
/// * A token with neither `alpha` nor `beta` is a recap token: it reproduces
///   an earlier output.
/// * `exact_q` marks a qumode position measurement (the `ε → 0` limit of a
///   single-vertex `θ` token).
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "crate::io::RawToken", into = "crate::io::RawToken")]
pub struct Token {
    pub alpha: Option<Hyperedge>,
    pub beta: Option<Hyperedge>,
    pub gamma: f64,
    pub phi: Vec<f64>,
    pub theta: BTreeMap<Vec<usize>, f64>,
    pub exact_q: bool,
}

pub type TokenSequence = Vec<Token>;

impl Token {
    pub fn recap() -> Self {
        Token::default()
    }

    pub fn gate(alpha: Hyperedge, gamma: f64) -> Self {
        Token { alpha: Some(alpha), gamma, ..Token::default() }
    }

    pub fn measure(beta: Hyperedge, phi: Vec<f64>, theta: BTreeMap<Vec<usize>, f64>) -> Self {
        Token { beta: Some(beta), phi, theta, ..Token::default() }
    }

    /// Single-qubit `X`-type measurement `exp(-iφ X_v)`.
    pub fn x_rotation(v: usize, phi: f64) -> Self {
        Token::measure(Hyperedge::single(v), vec![phi], BTreeMap::new())
    }

    /// Single-site diagonal measurement `exp(-iε |1⟩⟨1|_v)`.
    pub fn z_type(v: usize, eps: f64) -> Self {
        let mut theta = BTreeMap::new();
        theta.insert(vec![v], eps);
        Token::measure(Hyperedge::single(v), vec![0.0], theta)
    }

    /// Exact position measurement of mode `v`.
    pub fn exact_q(v: usize) -> Self {
        Token { exact_q: true, ..Token::measure(Hyperedge::single(v), vec![0.0], BTreeMap::new()) }
    }

    pub fn is_recap(&self) -> bool {
        self.alpha.is_none() && self.beta.is_none() && !self.exact_q
    }

    /// Both `φ` and `θ` vanish.
    pub fn kappa_is_zero(&self) -> bool {
        self.phi.iter().all(|&p| p == 0.0) && self.theta.values().all(|&t| t == 0.0)
    }

    /// The gate part is trivial (no support or zero angle).
    pub fn gate_is_trivial(&self) -> bool {
        self.alpha.is_none() || self.gamma == 0.0
    }

    /// Single-site `X` rotation without a diagonal part: the preparation form.
    pub fn is_prep_form(&self) -> bool {
        !self.exact_q
            && self.alpha.is_none()
            && self.beta.as_ref().is_some_and(|b| b.len() == 1)
            && self.theta.values().all(|&x| is_trivial_phase(x))
    }

    /// When `G` is a multiple of the identity, the phase `θ_∅` it carries.
    pub fn scalar_phase(&self) -> Option<f64> {
        self.beta.as_ref()?;
        if self.exact_q || !self.phi.iter().all(|&p| is_trivial_phase(p)) {
            return None;
        }
        let mut global = 0.0;
        for (w, &t) in &self.theta {
            if w.is_empty() {
                global += t;
            } else if !is_trivial_phase(t) {
                return None;
            }
        }
        Some(global)
    }

    /// Single-site diagonal measurement on `beta = {v}`; returns `v`.
    pub fn z_target(&self) -> Option<usize> {
        let beta = self.beta.as_ref()?;
        if beta.len() != 1 {
            return None;
        }
        let v = beta.vertices()[0];
        if self.exact_q {
            return Some(v);
        }
        let phi_zero = self.phi.iter().all(|&p| p == 0.0);
        let theta_ok = self.theta.keys().all(|s| s.is_empty() || s.as_slice() == [v]);
        let has_z = self.theta.get(&vec![v]).is_some_and(|&t| t != 0.0);
        (phi_zero && theta_ok && has_z).then_some(v)
    }

    /// Checks the field invariants for an `n`-site, `k`-bounded network.
    pub fn validate(&self, n: usize, k: usize) -> Result<()> {
        if let Some(a) = &self.alpha {
            a.check_range(n)?;
            if a.len() > k {
                return Err(Error::Structure(format!("alpha {a} exceeds k = {k}")));
            }
        }
        match &self.beta {
            Some(b) => {
                b.check_range(n)?;
                if b.len() > k {
                    return Err(Error::Structure(format!("beta {b} exceeds k = {k}")));
                }
                if self.phi.len() != b.len() {
                    return Err(Error::Dimension(format!(
                        "phi has length {} but beta {b} has {}",
                        self.phi.len(),
                        b.len()
                    )));
                }
                for s in self.theta.keys() {
                    if !s.iter().all(|&v| b.contains(v)) {
                        return Err(Error::Structure(format!(
                            "theta key {s:?} is not a subset of beta {b}"
                        )));
                    }
                }
            }
            None => {
                if !self.phi.is_empty() || !self.theta.is_empty() {
                    return Err(Error::Dimension("phi/theta given without beta".into()));
                }
            }
        }
        if !self.gamma.is_finite()
            || self.phi.iter().any(|p| !p.is_finite())
            || self.theta.values().any(|t| !t.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite token parameter".into()));
        }
        Ok(())
    }
}

/// Physical platform of a network: qubits or position-lattice qumodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    #[default]
    Qubit,
    Qumode,
}

/// Integer-coefficient multilinear polynomial in 0-based variables.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MultilinearPoly {
    pub constant: i64,
    terms: BTreeMap<Vec<usize>, i64>,
}

impl MultilinearPoly {
    pub fn constant(c: i64) -> Self {
        MultilinearPoly { constant: c, terms: BTreeMap::new() }
    }

    pub fn monomial(vars: Vec<usize>, coeff: i64) -> Result<Self> {
        let mut p = MultilinearPoly::default();
        p.add_term(normalize_subset(vars)?, coeff);
        Ok(p)
    }

    /// Adds `coeff · ∏ vars`; `vars` must already be sorted and distinct.
    pub fn add_term(&mut self, vars: Vec<usize>, coeff: i64) {
        if vars.is_empty() {
            self.constant += coeff;
            return;
        }
        let slot = self.terms.entry(vars.clone()).or_insert(0);
        *slot += coeff;
        if *slot == 0 {
            self.terms.remove(&vars);
        }
    }

    pub fn add(&mut self, other: &MultilinearPoly) {
        self.constant += other.constant;
        for (v, c) in &other.terms {
            self.add_term(v.clone(), *c);
        }
    }

    pub fn scaled(&self, s: i64) -> Self {
        let mut out = MultilinearPoly::constant(self.constant * s);
        for (v, c) in &self.terms {
            out.add_term(v.clone(), c * s);
        }
        out
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, i64)> {
        self.terms.iter().map(|(v, c)| (v, *c))
    }

    pub fn coefficient(&self, vars: &[usize]) -> i64 {
        if vars.is_empty() {
            self.constant
        } else {
            self.terms.get(vars).copied().unwrap_or(0)
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Value at a 0/1 point (`bits[v]` is variable `v`).
    pub fn eval(&self, bits: &[bool]) -> i64 {
        self.constant
            + self
                .terms
                .iter()
                .filter(|(v, _)| v.iter().all(|&i| bits[i]))
                .map(|(_, c)| c)
                .sum::<i64>()
    }

    /// Value at an integer point.
    pub fn eval_int(&self, x: &[i64]) -> i64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|(v, c)| c * v.iter().map(|&i| x[i]).product::<i64>())
                .sum::<i64>()
    }

    /// Substitutes `x_j → 1 - x_j`.
    pub fn flip(&self, j: usize) -> Self {
        self.substitute_affine(j, 1, -1)
    }

    /// Substitutes `x_j → x_j + 1`.
    pub fn shift(&self, j: usize) -> Self {
        self.substitute_affine(j, 1, 1)
    }

    /// Substitutes `x_j → a + b·x_j`.
    fn substitute_affine(&self, j: usize, a: i64, b: i64) -> Self {
        let mut out = MultilinearPoly::constant(self.constant);
        for (vars, &c) in &self.terms {
            if let Ok(pos) = vars.binary_search(&j) {
                let mut rest = vars.clone();
                rest.remove(pos);
                out.add_term(rest, c * a);
                out.add_term(vars.clone(), c * b);
            } else {
                out.add_term(vars.clone(), c);
            }
        }
        out
    }
}

/// `constant + Σ coeff·∏ bits` at a computational-basis point.
pub fn poly_eval(p: &MultilinearPoly, assignment: &[bool]) -> i64 {
    p.eval(assignment)
}

/// One output token.
///
/// Qubit engines and all `G` measurements report eigenphases in `(-π, π]`;
/// qumode position measurements report the residue class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Residue(i64),
    Phase(f64),
}

impl Outcome {
    pub fn key(&self) -> OutcomeKey {
        match *self {
            Outcome::Phase(x) => OutcomeKey::Phase(phase_key(x)),
            Outcome::Residue(r) => OutcomeKey::Residue(r),
        }
    }

    /// Phase value, with residues read as integers.
    pub fn value(&self) -> f64 {
        match *self {
            Outcome::Phase(x) => x,
            Outcome::Residue(r) => r as f64,
        }
    }

    pub fn as_phase(&self) -> Option<f64> {
        match *self {
            Outcome::Phase(x) => Some(x),
            Outcome::Residue(_) => None,
        }
    }
}

/// Hashable form of an [`Outcome`] used to match records across engines.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OutcomeKey {
    Phase(i64),
    Residue(i64),
}

/// Outputs of one trajectory; entry `i` belongs to token `i`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurementRecord {
    pub outcomes: Vec<Outcome>,
}

impl MeasurementRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn push(&mut self, o: Outcome) {
        self.outcomes.push(o);
    }

    pub fn key(&self) -> Vec<OutcomeKey> {
        self.outcomes.iter().map(Outcome::key).collect()
    }

    pub fn phases(phases: &[f64]) -> Self {
        MeasurementRecord { outcomes: phases.iter().map(|&p| Outcome::Phase(p)).collect() }
    }
}

impl From<Vec<Outcome>> for MeasurementRecord {
    fn from(outcomes: Vec<Outcome>) -> Self {
        MeasurementRecord { outcomes }
    }
}

/// Exact joint distribution over output records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutcomeDistribution {
    entries: Vec<(MeasurementRecord, f64)>,
}

impl OutcomeDistribution {
    /// Merges records with equal keys and sorts by key.
    pub fn from_entries(entries: impl IntoIterator<Item = (MeasurementRecord, f64)>) -> Self {
        let mut merged: BTreeMap<Vec<OutcomeKey>, (MeasurementRecord, f64)> = BTreeMap::new();
        for (r, p) in entries {
            merged.entry(r.key()).or_insert_with(|| (r, 0.0)).1 += p;
        }
        OutcomeDistribution { entries: merged.into_values().collect() }
    }

    pub fn entries(&self) -> &[(MeasurementRecord, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    fn keyed(&self) -> HashMap<Vec<OutcomeKey>, f64> {
        self.entries.iter().map(|(r, p)| (r.key(), *p)).collect()
    }

    /// Probability of an exact record (zero when absent).
    pub fn probability_of(&self, record: &MeasurementRecord) -> f64 {
        let key = record.key();
        self.entries.iter().find(|(r, _)| r.key() == key).map_or(0.0, |(_, p)| *p)
    }

    /// Total-variation distance `½ Σ |p - q|`.
    pub fn tv_distance(&self, other: &OutcomeDistribution) -> f64 {
        let a = self.keyed();
        let b = other.keyed();
        let mut sum = 0.0;
        for (k, p) in &a {
            sum += (p - b.get(k).copied().unwrap_or(0.0)).abs();
        }
        for (k, q) in &b {
            if !a.contains_key(k) {
                sum += q;
            }
        }
        0.5 * sum
    }

    /// Applies `f` to every record and merges collisions.
    pub fn map_records<F>(&self, mut f: F) -> Result<OutcomeDistribution>
    where
        F: FnMut(&MeasurementRecord) -> Result<MeasurementRecord>,
    {
        let mapped = self
            .entries
            .iter()
            .map(|(r, p)| Ok((f(r)?, *p)))
            .collect::<Result<Vec<_>>>()?;
        Ok(OutcomeDistribution::from_entries(mapped))
    }

    /// Distribution of the outcomes at `positions`, conditioned on the
    /// predicate holding for the whole record. Returns `None` when the
    /// conditioning event has probability zero.
    pub fn conditional<P>(&self, positions: &[usize], mut given: P) -> Option<OutcomeDistribution>
    where
        P: FnMut(&MeasurementRecord) -> bool,
    {
        let mut mass = 0.0;
        let mut kept = Vec::new();
        for (r, p) in &self.entries {
            if given(r) {
                mass += p;
                let sub: Vec<Outcome> = positions.iter().map(|&i| r.outcomes[i]).collect();
                kept.push((MeasurementRecord::from(sub), *p));
            }
        }
        if mass < PROB_FLOOR {
            return None;
        }
        Some(OutcomeDistribution::from_entries(kept.into_iter().map(|(r, p)| (r, p / mass))))
    }
}
