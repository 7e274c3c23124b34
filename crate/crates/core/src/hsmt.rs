//! The hypergraph stabilizer measurement translation task: instances, token
//! sequences, translation checks and the structured instance families used
//! to witness contextuality.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contextuality::{
    build_antidistinguishing_sequence, check_antidistinguishability, r_token, stabilizer_token,
    Candidate, Certificate,
};
use crate::engine::{outcomes_match, Engine};
use crate::error::{Error, Result};
use crate::io::{theta_from_json, theta_to_json};
use crate::phase::circular_distance;
use crate::types::{
    binomial, k_subsets_colex, Hyperedge, MeasurementRecord, Outcome, Setting, Token,
    WeightedHypergraph,
};

/// One `G` measurement of the tail, before the sign flip applied when it is
/// turned into a token.
#[derive(Clone, Debug, PartialEq)]
pub struct TailSpec {
    pub phi: Vec<f64>,
    pub theta: BTreeMap<Vec<usize>, f64>,
}

impl TailSpec {
    /// The spec whose token is `t`.
    pub fn from_token(t: &Token) -> Self {
        TailSpec {
            phi: t.phi.iter().map(|x| -x).collect(),
            theta: t.theta.iter().map(|(w, x)| (w.clone(), -x)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct HsmtInstance {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub upsilon: Vec<f64>,
    /// One angle per `k`-subset, in colex order.
    pub gamma: Vec<f64>,
    /// The `n - k` sites measured individually, in measurement order.
    pub b: Vec<usize>,
    pub tail: Vec<TailSpec>,
    pub setting: Setting,
}

/// Token index ranges of the five blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Blocks {
    pub prep: Range<usize>,
    pub gates: Range<usize>,
    pub recap: Range<usize>,
    pub z: Range<usize>,
    pub tail: Range<usize>,
}

pub fn min_len(n: usize, k: usize) -> usize {
    binomial(n, k) + 3 * n - k
}

impl HsmtInstance {
    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.n, self.k);
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got n = {n}, k = {k}")));
        }
        let min = min_len(n, k);
        if self.ell < min {
            return Err(Error::Precondition(format!("ell = {} is below C(n,k) + 3n - k = {min}", self.ell)));
        }
        if self.upsilon.len() != n {
            return Err(Error::Dimension(format!("upsilon has length {} for n = {n}", self.upsilon.len())));
        }
        let c = binomial(n, k);
        if self.gamma.len() != c {
            return Err(Error::Dimension(format!("gamma has length {} for C(n,k) = {c}", self.gamma.len())));
        }
        if self.b.len() != n - k {
            return Err(Error::Dimension(format!("b has length {} for n - k = {}", self.b.len(), n - k)));
        }
        let distinct: BTreeSet<usize> = self.b.iter().copied().collect();
        if distinct.len() != self.b.len() {
            return Err(Error::Structure("b repeats a site".into()));
        }
        if let Some(&v) = self.b.iter().find(|&&v| v >= n) {
            return Err(Error::OutOfRange { index: v + 1, n });
        }
        if self.tail.len() != self.ell - min {
            return Err(Error::Dimension(format!(
                "tail has {} measurements for ell - (C(n,k) + 3n - k) = {}",
                self.tail.len(),
                self.ell - min
            )));
        }
        let c_bar = self.complement();
        for (i, t) in self.tail.iter().enumerate() {
            if t.phi.len() != k {
                return Err(Error::Dimension(format!("tail {i}: phi has length {} for k = {k}", t.phi.len())));
            }
            if let Some(w) = t.theta.keys().find(|w| !w.iter().all(|&v| c_bar.contains(v))) {
                return Err(Error::Structure(format!(
                    "tail {i}: theta key {:?} leaves the unmeasured sites {c_bar}",
                    w.iter().map(|v| v + 1).collect::<Vec<_>>()
                )));
            }
        }
        let finite = self.upsilon.iter().chain(&self.gamma).all(|x| x.is_finite())
            && self.tail.iter().all(|t| t.phi.iter().chain(t.theta.values()).all(|x| x.is_finite()));
        if !finite {
            return Err(Error::InvalidArgument("non-finite instance parameter".into()));
        }
        Ok(())
    }

    /// The `k` sites left after the individual measurements.
    pub fn complement(&self) -> Hyperedge {
        Hyperedge::new((0..self.n).filter(|v| !self.b.contains(v))).expect("distinct sites")
    }

    pub fn blocks(&self) -> Blocks {
        let (n, k) = (self.n, self.k);
        let g = n + binomial(n, k);
        let r = g + n;
        let z = r + n - k;
        Blocks { prep: 0..n, gates: n..g, recap: g..r, z: r..z, tail: z..self.ell }
    }

    /// `(τ₁, τ₂)` of the constrained grammar: the hypergraph is complete
    /// after the recap block, and the individual measurements follow.
    pub fn phase_boundaries(&self) -> (usize, usize) {
        let b = self.blocks();
        (b.recap.end, b.z.end)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTail {
    phi: Vec<f64>,
    #[serde(default)]
    theta: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    n: usize,
    k: usize,
    ell: usize,
    upsilon: Vec<f64>,
    gamma: Vec<f64>,
    b: Vec<usize>,
    #[serde(default)]
    tail: Vec<RawTail>,
    #[serde(default)]
    setting: Setting,
}

impl From<HsmtInstance> for RawInstance {
    fn from(i: HsmtInstance) -> Self {
        RawInstance {
            n: i.n,
            k: i.k,
            ell: i.ell,
            upsilon: i.upsilon,
            gamma: i.gamma,
            b: i.b.iter().map(|v| v + 1).collect(),
            tail: i
                .tail
                .into_iter()
                .map(|t| RawTail { phi: t.phi, theta: theta_to_json(&t.theta) })
                .collect(),
            setting: i.setting,
        }
    }
}

impl TryFrom<RawInstance> for HsmtInstance {
    type Error = Error;

    fn try_from(r: RawInstance) -> Result<Self> {
        if r.b.contains(&0) {
            return Err(Error::OutOfRange { index: 0, n: r.n });
        }
        let inst = HsmtInstance {
            n: r.n,
            k: r.k,
            ell: r.ell,
            upsilon: r.upsilon,
            gamma: r.gamma,
            b: r.b.iter().map(|v| v - 1).collect(),
            tail: r
                .tail
                .into_iter()
                .map(|t| Ok(TailSpec { phi: t.phi, theta: theta_from_json(&t.theta)? }))
                .collect::<Result<_>>()?,
            setting: r.setting,
        };
        inst.validate()?;
        Ok(inst)
    }
}

fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    a / (a + b)
}

/// Smooth bump equal to 1 on `[b, c]` and vanishing outside `(a, d)`.
fn bump(x: f64, a: f64, b: f64, c: f64, d: f64) -> f64 {
    smooth_step((x - a) / (b - a)) * smooth_step((d - x) / (d - c))
}

/// The smooth `2π`-periodic function equal to 1 on `[π/2, π]` and 0 on
/// `[3π/2, 2π]` modulo `2π`.
pub fn bubble_wrap(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("bubble_wrap needs a finite input, got {x}")));
    }
    let y = x.rem_euclid(2.0 * PI);
    Ok(bump(y, 0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2))
}

pub fn build_sequence(inst: &HsmtInstance) -> Result<Vec<Token>> {
    inst.validate()?;
    let (n, k) = (inst.n, inst.k);
    let mut out = Vec::with_capacity(inst.ell);
    for (i, &u) in inst.upsilon.iter().enumerate() {
        out.push(Token::x_rotation(i, -2.0 * u));
    }
    for (edge, &g) in k_subsets_colex(n, k).into_iter().zip(&inst.gamma) {
        out.push(Token::gate(edge, -g));
    }
    out.extend((0..n).map(|_| Token::recap()));
    for &v in &inst.b {
        out.push(match inst.setting {
            Setting::Qubit => Token::z_type(v, 1.0),
            Setting::Qumode => Token::exact_q(v),
        });
    }
    let c_bar = inst.complement();
    for t in &inst.tail {
        out.push(Token::measure(
            c_bar.clone(),
            t.phi.iter().map(|x| -x).collect(),
            t.theta.iter().map(|(w, x)| (w.clone(), -x)).collect(),
        ));
    }
    debug_assert_eq!(out.len(), inst.ell);
    Ok(out)
}

/// Parameters of [`random_instance`].
#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub n: usize,
    pub k: usize,
    pub ell: usize,
    pub setting: Setting,
    /// Qumode weights are drawn from `(1/d)ℤ`.
    pub denominator: i64,
}

impl GenConfig {
    pub fn new(n: usize, k: usize, ell: usize) -> Self {
        GenConfig { n, k, ell, setting: Setting::Qubit, denominator: 1 }
    }
}

fn random_subset(rng: &mut ChaCha8Rng, within: &[usize]) -> Vec<usize> {
    within.iter().copied().filter(|_| rng.gen_bool(0.5)).collect()
}

/// A random instance.
///
/// Qubit instances take continuous angles and `υ_i = t(‖γ‖²)` with `t` the
/// bubble-wrap function. Qumode instances keep every angle on the lattice
/// the residue engine can represent: `γ ∈ (π/d)ℤ`, `υ_i = 1`, even `φ` and
/// `θ ∈ (π/d)ℤ`.
pub fn random_instance(cfg: &GenConfig, seed: u64) -> Result<HsmtInstance> {
    let (n, k) = (cfg.n, cfg.k);
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got n = {n}, k = {k}")));
    }
    if cfg.ell < min_len(n, k) {
        return Err(Error::Precondition(format!(
            "ell = {} is below C(n,k) + 3n - k = {}",
            cfg.ell,
            min_len(n, k)
        )));
    }
    if cfg.denominator < 1 {
        return Err(Error::InvalidArgument("denominator must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = cfg.denominator;
    let c = binomial(n, k);
    let gamma: Vec<f64> = (0..c)
        .map(|_| match cfg.setting {
            Setting::Qubit => rng.gen_range(-PI..PI),
            Setting::Qumode => PI * rng.gen_range(-2 * d..=2 * d) as f64 / d as f64,
        })
        .collect();
    let upsilon = match cfg.setting {
        Setting::Qubit => vec![bubble_wrap(gamma.iter().map(|g| g * g).sum())?; n],
        Setting::Qumode => vec![1.0; n],
    };
    let mut sites: Vec<usize> = (0..n).collect();
    sites.shuffle(&mut rng);
    let b = sites[..n - k].to_vec();
    let mut c_bar: Vec<usize> = sites[n - k..].to_vec();
    c_bar.sort_unstable();
    let tail = (0..cfg.ell - min_len(n, k))
        .map(|_| {
            let mut theta = BTreeMap::new();
            for _ in 0..rng.gen_range(0..=3) {
                let w = random_subset(&mut rng, &c_bar);
                let x = match cfg.setting {
                    Setting::Qubit => rng.gen_range(-PI..PI),
                    Setting::Qumode => PI * rng.gen_range(-2 * d..2 * d) as f64 / d as f64,
                };
                theta.insert(w, x);
            }
            let phi = (0..k)
                .map(|_| match cfg.setting {
                    Setting::Qubit => rng.gen_range(-PI..PI),
                    Setting::Qumode => 2.0 * rng.gen_range(-2i64..=2) as f64,
                })
                .collect();
            TailSpec { phi, theta }
        })
        .collect();
    let inst = HsmtInstance { n, k, ell: cfg.ell, upsilon, gamma, b, tail, setting: cfg.setting };
    inst.validate()?;
    Ok(inst)
}

/// Whether `y` is a correct translation of the instance: the gate block is
/// all zeros, the recap block repeats the preparation block, and `engine`
/// assigns the whole record positive probability.
pub fn validate_translation(inst: &HsmtInstance, y: &MeasurementRecord, engine: &dyn Engine) -> Result<bool> {
    if y.len() != inst.ell {
        return Err(Error::Dimension(format!("record has {} outputs for ell = {}", y.len(), inst.ell)));
    }
    let blocks = inst.blocks();
    let zero = Outcome::Phase(0.0);
    if !y.outcomes[blocks.gates.clone()].iter().all(|o| outcomes_match(o, &zero)) {
        return Ok(false);
    }
    let recap_ok = blocks
        .prep
        .clone()
        .zip(blocks.recap.clone())
        .all(|(i, j)| outcomes_match(&y.outcomes[i], &y.outcomes[j]));
    if !recap_ok {
        return Ok(false);
    }
    let tokens = build_sequence(inst)?;
    match engine.replay(&tokens, y) {
        Ok(p) => Ok(p > 0.0),
        Err(Error::InconsistentRecord { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// How the preparation block lines up with the first phase of the
/// constrained grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Alignment {
    /// Every token up to `τ₁` has `κ = 0`.
    Strict,
    /// As `Strict`, except that the leading single-site `X` preparations
    /// are allowed a nonzero `φ`.
    #[default]
    PrepExempt,
}

/// Phase structure of the constrained qubit grammar: up to `τ₁` only gates,
/// then single-site diagonal measurements on exactly `n - k` distinct sites
/// up to `τ₂`, then measurements without gates.
pub fn validate_phase_structure(
    tokens: &[Token],
    n: usize,
    k: usize,
    tau1: usize,
    tau2: usize,
    alignment: Alignment,
) -> bool {
    if tau1 > tau2 || tau2 > tokens.len() || k > n {
        return false;
    }
    let mut prep_run = alignment == Alignment::PrepExempt;
    for t in &tokens[..tau1] {
        if prep_run && t.is_prep_form() && t.gate_is_trivial() {
            continue;
        }
        prep_run = false;
        if !t.kappa_is_zero() {
            return false;
        }
    }
    let mut targets = BTreeSet::new();
    for t in &tokens[tau1..tau2] {
        match t.z_target() {
            Some(v) if t.gate_is_trivial() => {
                targets.insert(v);
            }
            _ => return false,
        }
    }
    targets.len() == n - k && tokens[tau2..].iter().all(Token::gate_is_trivial)
}

/// Three instances sharing the measurement suffix that rules one of them
/// out with certainty, and the preparation outputs to condition on.
#[derive(Clone, Debug)]
pub struct ContextualTriple {
    pub instances: [HsmtInstance; 3],
    /// Outputs of the preparation, gate and recap blocks.
    pub given: [MeasurementRecord; 3],
    pub edge: Hyperedge,
}

impl ContextualTriple {
    pub fn prefix_len(&self) -> usize {
        self.instances[0].blocks().recap.end
    }

    pub fn candidates(&self) -> Result<([Candidate; 3], Vec<Token>)> {
        let cut = self.prefix_len();
        let seqs = self.instances.iter().map(build_sequence).collect::<Result<Vec<_>>>()?;
        let suffix = seqs[0][cut..].to_vec();
        let cand = |i: usize| Candidate { prefix: seqs[i][..cut].to_vec(), given: Some(self.given[i].clone()) };
        Ok(([cand(0), cand(1), cand(2)], suffix))
    }

    pub fn certify(&self, engine: &dyn Engine, max_leaves: usize) -> Result<Certificate> {
        let (cands, suffix) = self.candidates()?;
        check_antidistinguishability(&cands, &suffix, engine, max_leaves)
    }
}

fn prefix_given(n: usize, c: usize, prep: f64) -> MeasurementRecord {
    let mut out = vec![Outcome::Phase(prep); n];
    out.extend(std::iter::repeat_n(Outcome::Phase(0.0), c));
    out.extend(std::iter::repeat_n(Outcome::Phase(prep), n));
    MeasurementRecord::from(out)
}

/// Instances preparing `psi1`, `psi2` and the all-zero reference, completed
/// by the antidistinguishing sequence of the pair.
pub fn triple_from_pair(
    psi1: &WeightedHypergraph,
    psi2: &WeightedHypergraph,
    setting: Setting,
) -> Result<ContextualTriple> {
    let seq = build_antidistinguishing_sequence(psi1, psi2, setting)?;
    let (n, k) = (psi1.n(), psi1.k());
    let edges = k_subsets_colex(n, k);
    let c = edges.len();
    let b: Vec<usize> = (0..n).filter(|v| !seq.edge.contains(*v)).collect();
    let tail: Vec<TailSpec> = seq.tokens[n - k..].iter().map(TailSpec::from_token).collect();
    let (upsilon, prep_out) = match setting {
        Setting::Qubit => (FRAC_PI_4, FRAC_PI_2),
        Setting::Qumode => (1.0, 0.0),
    };
    let make = |g: Option<&WeightedHypergraph>| HsmtInstance {
        n,
        k,
        ell: min_len(n, k) + tail.len(),
        upsilon: vec![if g.is_some() { upsilon } else { 0.0 }; n],
        gamma: edges.iter().map(|e| g.map_or(0.0, |g| PI * g.weight(e))).collect(),
        b: b.clone(),
        tail: tail.clone(),
        setting,
    };
    let instances = [make(Some(psi1)), make(Some(psi2)), make(None)];
    for i in &instances {
        i.validate()?;
    }
    Ok(ContextualTriple {
        instances,
        given: [prefix_given(n, c, prep_out), prefix_given(n, c, prep_out), prefix_given(n, c, 0.0)],
        edge: seq.edge,
    })
}

/// The lattice product state, the same state with a unit weight on the first
/// `k`-subset, and the all-zero reference.
pub fn build_contextual_triple(n: usize, k: usize, setting: Setting) -> Result<ContextualTriple> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!("contextual triples need 2 ≤ k ≤ n, got n = {n}, k = {k}")));
    }
    let psi1 = WeightedHypergraph::new(n, k);
    let first = k_subsets_colex(n, k).remove(0);
    let psi2 = WeightedHypergraph::from_entries(n, k, [(first.vertices().to_vec(), 1.0)])?;
    triple_from_pair(&psi1, &psi2, setting)
}

/// A qubit instance and a `d = 1` qumode instance with `k = 2` that agree
/// outcome by outcome once outputs are reduced to bits.
pub fn random_mod2_pair(n: usize, seed: u64) -> Result<(HsmtInstance, HsmtInstance)> {
    let k = 2;
    if n < k {
        return Err(Error::InvalidArgument(format!("need n ≥ 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prepared: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.75)).collect();
    let gamma: Vec<f64> = (0..binomial(n, k)).map(|_| if rng.gen_bool(0.5) { PI } else { 0.0 }).collect();
    let mut sites: Vec<usize> = (0..n).collect();
    sites.shuffle(&mut rng);
    let b = sites[..n - k].to_vec();
    let c_bar = Hyperedge::new(sites[n - k..].iter().copied())?;
    let kinds: Vec<u8> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..3)).collect();
    let make = |setting: Setting| -> Result<HsmtInstance> {
        let tail = kinds
            .iter()
            .map(|&kind| {
                let t = match kind {
                    0 => r_token(&c_bar, setting)?,
                    1 => stabilizer_token(&c_bar, 0.0, setting)?,
                    _ => stabilizer_token(&c_bar, 1.0, setting)?,
                };
                Ok(TailSpec::from_token(&t))
            })
            .collect::<Result<Vec<_>>>()?;
        let on = match setting {
            Setting::Qubit => FRAC_PI_4,
            Setting::Qumode => 1.0,
        };
        let inst = HsmtInstance {
            n,
            k,
            ell: min_len(n, k) + tail.len(),
            upsilon: prepared.iter().map(|&p| if p { on } else { 0.0 }).collect(),
            gamma: gamma.clone(),
            b: b.clone(),
            tail,
            setting,
        };
        inst.validate()?;
        Ok(inst)
    };
    Ok((make(Setting::Qubit)?, make(Setting::Qumode)?))
}

fn near(x: f64, target: f64) -> bool {
    circular_distance(x, target) < 1e-7
}

/// Reduces every output of a record of `inst` to a bit: preparation
/// outcomes by the sign they leave on the site, position or `Z` outcomes by
/// parity, and `±1`-spectrum measurements by their sign.
pub fn mod2_labels(inst: &HsmtInstance, y: &MeasurementRecord) -> Result<MeasurementRecord> {
    if y.len() != inst.ell {
        return Err(Error::Dimension(format!("record has {} outputs for ell = {}", y.len(), inst.ell)));
    }
    let blocks = inst.blocks();
    let bad = |i: usize, o: &Outcome| Error::InvalidArgument(format!("output {i} ({o:?}) has no bit label"));
    let labels = y
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let x = o.value();
            let bit = if blocks.prep.contains(&i) || blocks.recap.contains(&i) {
                match (inst.setting, o) {
                    (_, Outcome::Phase(_)) if near(x, 0.0) => 0,
                    (Setting::Qubit, Outcome::Phase(_)) if near(x, FRAC_PI_2) => 0,
                    (Setting::Qubit, Outcome::Phase(_)) if near(x, -FRAC_PI_2) => 1,
                    (Setting::Qumode, Outcome::Phase(_)) if near(x, PI) => 1,
                    _ => return Err(bad(i, o)),
                }
            } else if blocks.gates.contains(&i) {
                if !near(x, 0.0) {
                    return Err(bad(i, o));
                }
                0
            } else if blocks.z.contains(&i) {
                match o {
                    Outcome::Residue(r) => r.rem_euclid(2),
                    Outcome::Phase(_) if near(x, 0.0) => 0,
                    Outcome::Phase(_) if near(x, -1.0) => 1,
                    _ => return Err(bad(i, o)),
                }
            } else if near(x, 0.0) {
                0
            } else if near(x, PI) {
                1
            } else {
                return Err(bad(i, o));
            };
            Ok(Outcome::Residue(bit))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasurementRecord::from(labels))
}
