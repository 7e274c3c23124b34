//! Scalable qubit engine.
//!
//! While the translation-task grammar is in its preparation, gate and
//! single-qubit `Z` stages, the latent state is a weighted hypergraph state
//! over the qubits prepared in the `X` basis. Memory is one weight per
//! hyperedge. Once at most `k` qubits remain unmeasured, the residual state is
//! expanded into `2^k` amplitudes and the remaining measurements run densely.

use std::cmp::Ordering;

use crate::engine::{
    impl_engine, recap_outcome, recap_slots, sample_final, Branch, EngineConfig, Simulator,
};
use crate::error::{Error, Result};
use crate::phase::{is_trivial_phase, wrap_phase};
use crate::statevector::{
    build_g_unitary, measurement_branches, DenseState, ProjectorConvention, Spectrum,
};
use crate::types::{Hyperedge, MeasurementRecord, Outcome, Token, WeightedHypergraph};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Weights closer than this to an even integer are dropped.
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitFlag {
    /// Still in the initial `|0⟩`.
    Zbasis0,
    /// Part of the hypergraph state (prepared in `|+⟩`, signs folded into weights).
    XPlus,
    /// Measured in the computational basis with the given bit.
    MeasuredOut(u8),
}

/// Grammar stage; stages only move forward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Prep,
    Gates,
    Recap,
    Measure,
}

/// The at most `k` surviving qubits after the hypergraph stage.
#[derive(Clone, Debug)]
pub struct ResidualDense {
    pub live_qubits: Vec<usize>,
    pub state: DenseState,
}

#[derive(Clone, Debug)]
pub struct HypergraphLatent {
    flags: Vec<QubitFlag>,
    prepared: Vec<bool>,
    graph: WeightedHypergraph,
    /// Phase on the empty edge, in units of π. Never observable.
    global_phase: f64,
    stage: Stage,
    residual: Option<ResidualDense>,
    peak_entries: usize,
}

impl HypergraphLatent {
    pub fn new(n: usize) -> Self {
        HypergraphLatent {
            flags: vec![QubitFlag::Zbasis0; n],
            prepared: vec![false; n],
            graph: WeightedHypergraph::new(n, n),
            global_phase: 0.0,
            stage: Stage::Prep,
            residual: None,
            peak_entries: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.flags.len()
    }

    pub fn graph(&self) -> &WeightedHypergraph {
        &self.graph
    }

    pub fn flags(&self) -> &[QubitFlag] {
        &self.flags
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    /// Largest number of stored hyperedge weights seen so far.
    pub fn peak_entries(&self) -> usize {
        self.peak_entries
    }

    pub fn residual(&self) -> Option<&ResidualDense> {
        self.residual.as_ref()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n() {
            return Err(Error::OutOfRange { index: q, n: self.n() });
        }
        Ok(())
    }

    /// Adds `w` (units of π) to edge `e`, reducing modulo 2.
    fn add_weight(&mut self, e: Hyperedge, w: f64) {
        let total = (self.graph.weight(&e) + w).rem_euclid(2.0);
        if total < WEIGHT_TOL || 2.0 - total < WEIGHT_TOL {
            self.graph.remove(&e);
        } else {
            self.graph.set_weight(e, total);
        }
        self.peak_entries = self.peak_entries.max(self.graph.len());
    }

    fn add_global(&mut self, w: f64) {
        self.global_phase = (self.global_phase + w).rem_euclid(2.0);
    }

    /// Branches of measuring `exp(-iφX_q)` on a fresh qubit: `(phase, p, latent)`.
    ///
    /// The `+1` eigenvector `|+⟩` has phase `-φ`, `|−⟩` has `+φ`. When the two
    /// coincide modulo 2π the operator is a scalar and nothing collapses.
    pub fn prep_branches(&self, q: usize, phi: f64) -> Result<Vec<(f64, f64, Self)>> {
        self.check_qubit(q)?;
        if self.prepared[q] || self.flags[q] != QubitFlag::Zbasis0 {
            return Err(Error::Precondition(format!("qubit {} already prepared", q + 1)));
        }
        let mut base = self.clone();
        base.prepared[q] = true;
        if is_trivial_phase(2.0 * phi) {
            return Ok(vec![(wrap_phase(-phi), 1.0, base)]);
        }
        base.flags[q] = QubitFlag::XPlus;
        let plus = base.clone();
        let mut minus = base;
        // Z|+⟩ = |−⟩ is a weight-1 single-vertex edge
        minus.add_weight(Hyperedge::single(q), 1.0);
        let mut out = vec![(wrap_phase(-phi), 0.5, plus), (wrap_phase(phi), 0.5, minus)];
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(out)
    }

    /// Measurement of `exp(2iυX_q)` on a fresh qubit.
    pub fn prep_measure_x(&self, q: usize, upsilon: f64) -> Result<Vec<(f64, f64, Self)>> {
        self.prep_branches(q, -2.0 * upsilon)
    }

    /// `U(e) = exp(iπe ∏ n_j)` on qubits that are all in the hypergraph.
    pub fn apply_ckz(&mut self, edge: &Hyperedge, e: f64) -> Result<()> {
        edge.check_range(self.n())?;
        if let Some(&v) = edge.vertices().iter().find(|&&v| self.flags[v] != QubitFlag::XPlus) {
            return Err(Error::Precondition(format!(
                "qubit {} is not in the X basis ({:?})",
                v + 1,
                self.flags[v]
            )));
        }
        if e != 0.0 {
            self.add_weight(edge.clone(), e);
        }
        Ok(())
    }

    /// Adds the phase polynomial `e·∏_{j∈S} n_j`, substituting qubits whose
    /// value is already fixed.
    fn add_monomial(&mut self, vertices: &[usize], e: f64) {
        let mut rest = Vec::with_capacity(vertices.len());
        for &v in vertices {
            match self.flags[v] {
                QubitFlag::Zbasis0 | QubitFlag::MeasuredOut(0) => return,
                QubitFlag::MeasuredOut(_) => {}
                QubitFlag::XPlus => rest.push(v),
            }
        }
        match Hyperedge::new(rest) {
            Ok(e_rest) => self.add_weight(e_rest, e),
            Err(_) => self.add_global(e),
        }
    }

    /// A gate token's phase polynomial under either projector convention.
    pub fn apply_gate(&mut self, edge: &Hyperedge, e: f64, conv: ProjectorConvention) -> Result<()> {
        edge.check_range(self.n())?;
        if e == 0.0 {
            return Ok(());
        }
        let v = edge.vertices();
        match conv {
            ProjectorConvention::Ones => self.add_monomial(v, e),
            ProjectorConvention::Zeros => {
                // ∏(1 - n_j) = Σ_S (-1)^|S| n_S
                for mask in 0u32..(1 << v.len()) {
                    let sub: Vec<usize> =
                        (0..v.len()).filter(|j| mask >> j & 1 == 1).map(|j| v[j]).collect();
                    let sign = if sub.len().is_multiple_of(2) { 1.0 } else { -1.0 };
                    self.add_monomial(&sub, sign * e);
                }
            }
        }
        Ok(())
    }

    /// Branches of a computational-basis measurement of qubit `q`:
    /// `(bit, p, latent)`.
    pub fn measure_z(&self, q: usize) -> Result<Vec<(u8, f64, Self)>> {
        self.check_qubit(q)?;
        match self.flags[q] {
            QubitFlag::MeasuredOut(_) => {
                Err(Error::Precondition(format!("qubit {} already measured", q + 1)))
            }
            QubitFlag::Zbasis0 => {
                let mut s = self.clone();
                s.flags[q] = QubitFlag::MeasuredOut(0);
                Ok(vec![(0, 1.0, s)])
            }
            QubitFlag::XPlus => {
                let touching = self.graph.edges_containing(q);
                let mut out = Vec::with_capacity(2);
                for m in 0..2u8 {
                    let mut s = self.clone();
                    s.flags[q] = QubitFlag::MeasuredOut(m);
                    for (e, w) in &touching {
                        s.graph.remove(e);
                        if m == 1 {
                            match e.without(q) {
                                Some(rest) => s.add_weight(rest, *w),
                                None => s.add_global(*w),
                            }
                        }
                    }
                    out.push((m, 0.5, s));
                }
                Ok(out)
            }
        }
    }

    /// Qubits not yet measured out.
    pub fn live_qubits(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&q| !matches!(self.flags[q], QubitFlag::MeasuredOut(_)))
            .collect()
    }

    /// Exact amplitudes of the unmeasured qubits (local bit `j` is the `j`-th
    /// live qubit). Fails when more than `k` remain.
    pub fn dense_handoff(&self, k: usize) -> Result<ResidualDense> {
        let live = self.live_qubits();
        if live.len() > k {
            return Err(Error::Precondition(format!(
                "{} qubits are still live, at most k = {k} can be expanded",
                live.len()
            )));
        }
        let pos = |v: usize| live.binary_search(&v).ok();
        let zero_mask: usize = live
            .iter()
            .enumerate()
            .filter(|(_, &q)| self.flags[q] == QubitFlag::Zbasis0)
            .map(|(j, _)| 1 << j)
            .sum();
        let edges: Vec<(usize, f64)> = self
            .graph
            .iter()
            .map(|(e, w)| {
                let mask = e.vertices().iter().map(|&v| 1usize << pos(v).expect("edge on live qubit")).sum();
                (mask, w)
            })
            .collect();
        let amps: Vec<C64> = (0..1usize << live.len())
            .map(|x| {
                if x & zero_mask != 0 {
                    return C64::new(0.0, 0.0);
                }
                let e: f64 = self.global_phase
                    + edges.iter().filter(|(m, _)| x & m == *m).map(|(_, w)| w).sum::<f64>();
                C64::from_polar(1.0, PI * e)
            })
            .collect();
        Ok(ResidualDense { state: DenseState::from_amplitudes(live.len(), 2, amps)?, live_qubits: live })
    }

    fn advance(&mut self, index: usize, to: Stage) -> Result<()> {
        match self.stage.cmp(&to) {
            Ordering::Greater => Err(Error::Grammar {
                index,
                reason: format!("{to:?} token after the {:?} stage", self.stage),
            }),
            _ => {
                self.stage = to;
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct HypergraphEngine {
    n: usize,
    k: usize,
    convention: ProjectorConvention,
}

impl HypergraphEngine {
    pub fn new(cfg: &EngineConfig) -> Result<Self> {
        if cfg.k == 0 || cfg.k > cfg.n.max(1) {
            return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got k = {}", cfg.k)));
        }
        Ok(HypergraphEngine { n: cfg.n, k: cfg.k, convention: cfg.convention })
    }

    pub fn simulator<'a>(&self, tokens: &'a [Token]) -> Result<HypergraphSimulator<'a>> {
        let mut spectra = Vec::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            t.validate(self.n, self.k)?;
            if t.exact_q {
                return Err(Error::Grammar {
                    index: i,
                    reason: "position measurements need the qumode engine".into(),
                });
            }
            if t.alpha.is_some() && t.beta.is_some() {
                return Err(Error::Grammar {
                    index: i,
                    reason: "a token may carry a gate or a measurement, not both".into(),
                });
            }
            spectra.push(match &t.beta {
                Some(b) => Some(Spectrum::of(&build_g_unitary(b, &t.phi, &t.theta)?)?),
                None => None,
            });
        }
        Ok(HypergraphSimulator {
            n: self.n,
            k: self.k,
            convention: self.convention,
            tokens,
            spectra,
            recap: recap_slots(tokens),
        })
    }

    /// One trajectory together with the peak number of stored weights.
    pub fn sample_instrumented(
        &self,
        tokens: &[Token],
        seed: u64,
        trajectory: u64,
    ) -> Result<(MeasurementRecord, usize)> {
        let (record, state) = sample_final(&self.simulator(tokens)?, seed, trajectory)?;
        Ok((record, state.peak_entries()))
    }
}

impl_engine!(HypergraphEngine, "hypergraph");

pub struct HypergraphSimulator<'a> {
    n: usize,
    k: usize,
    convention: ProjectorConvention,
    tokens: &'a [Token],
    spectra: Vec<Option<Spectrum>>,
    recap: Vec<Option<usize>>,
}

impl HypergraphSimulator<'_> {
    fn general(
        &self,
        mut state: HypergraphLatent,
        index: usize,
    ) -> Result<Vec<Branch<HypergraphLatent>>> {
        let t = &self.tokens[index];
        let beta = t.beta.as_ref().expect("measurement token");
        if state.residual.is_none() {
            state.residual = Some(state.dense_handoff(self.k)?);
        }
        let res = state.residual.as_ref().expect("residual present");
        let sites = beta
            .vertices()
            .iter()
            .map(|&v| {
                res.live_qubits.binary_search(&v).map_err(|_| {
                    Error::Precondition(format!("qubit {} was already measured out", v + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = self.spectra[index].as_ref().expect("spectrum cached");
        let branches = measurement_branches(&res.state, &sites, spec)?;
        Ok(branches
            .into_iter()
            .map(|(phase, p, dense)| {
                let mut s = state.clone();
                s.residual.as_mut().expect("residual present").state = dense;
                Branch { outcome: Outcome::Phase(phase), p, state: s }
            })
            .collect())
    }
}

impl Simulator for HypergraphSimulator<'_> {
    type State = HypergraphLatent;

    fn len(&self) -> usize {
        self.tokens.len()
    }

    fn initial(&self) -> Result<HypergraphLatent> {
        Ok(HypergraphLatent::new(self.n))
    }

    fn step(
        &self,
        mut state: HypergraphLatent,
        index: usize,
        record: &MeasurementRecord,
    ) -> Result<Vec<Branch<HypergraphLatent>>> {
        if let Some(slot) = self.recap[index] {
            state.advance(index, Stage::Recap)?;
            return Ok(Branch::certain(recap_outcome(index, slot, record)?, state));
        }
        let t = &self.tokens[index];
        if let Some(a) = &t.alpha {
            state.advance(index, Stage::Gates)?;
            state.apply_gate(a, -t.gamma / PI, self.convention)?;
            return Ok(Branch::certain(Outcome::Phase(0.0), state));
        }
        let beta = t.beta.as_ref().expect("non-recap token has alpha or beta");
        if state.stage == Stage::Prep && t.is_prep_form() {
            let q = beta.vertices()[0];
            return Ok(state
                .prep_branches(q, t.phi[0])?
                .into_iter()
                .map(|(ph, p, s)| Branch { outcome: Outcome::Phase(ph), p, state: s })
                .collect());
        }
        state.advance(index, Stage::Measure)?;
        if let Some(theta0) = t.scalar_phase() {
            return Ok(Branch::certain(Outcome::Phase(wrap_phase(-theta0)), state));
        }
        if let (None, Some(q)) = (&state.residual, t.z_target()) {
            let theta0 = t.theta.get(&Vec::new()).copied().unwrap_or(0.0);
            let theta_q = t.theta[&vec![q]];
            let mut out: Vec<Branch<HypergraphLatent>> = state
                .measure_z(q)?
                .into_iter()
                .map(|(m, p, s)| Branch {
                    outcome: Outcome::Phase(wrap_phase(-theta0 - theta_q * m as f64)),
                    p,
                    state: s,
                })
                .collect();
            out.sort_by(|a, b| a.outcome.value().total_cmp(&b.outcome.value()));
            return Ok(out);
        }
        self.general(state, index)
    }
}
