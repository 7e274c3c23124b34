//! Engine abstraction, the shared sampling/enumeration driver and the
//! name-keyed registry used by the command line.
//!
//! A simulator exposes one operation: advance a state by one token and
//! return every outcome branch in canonical (ascending) order. Sampling,
//! exact enumeration and record replay are derived from that single step.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::phase::{circular_distance, KEY_RESOLUTION};
use crate::rng::{pick, token_uniform};
use crate::statevector::ProjectorConvention;
use crate::types::{MeasurementRecord, Outcome, OutcomeDistribution, Token};

/// One possible result of a token.
pub struct Branch<S> {
    pub outcome: Outcome,
    pub p: f64,
    pub state: S,
}

impl<S> Branch<S> {
    pub fn certain(outcome: Outcome, state: S) -> Vec<Branch<S>> {
        vec![Branch { outcome, p: 1.0, state }]
    }
}

/// Token-level transition function of one engine on one fixed sequence.
pub trait Simulator {
    type State: Clone;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn initial(&self) -> Result<Self::State>;

    /// Branches of token `index` from `state`, given the outputs so far.
    fn step(
        &self,
        state: Self::State,
        index: usize,
        record: &MeasurementRecord,
    ) -> Result<Vec<Branch<Self::State>>>;
}

/// Index of each recap token among recap tokens, used to replay outputs.
pub fn recap_slots(tokens: &[Token]) -> Vec<Option<usize>> {
    let mut next = 0;
    tokens
        .iter()
        .map(|t| {
            t.is_recap().then(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

/// Output of a recap token: the `slot`-th earlier output, verbatim.
pub fn recap_outcome(index: usize, slot: usize, record: &MeasurementRecord) -> Result<Outcome> {
    record.outcomes.get(slot).copied().ok_or_else(|| Error::Grammar {
        index,
        reason: format!("recap token {slot} has no earlier output to repeat"),
    })
}

/// Draws one trajectory.
pub fn sample_with<S: Simulator>(sim: &S, seed: u64, trajectory: u64) -> Result<MeasurementRecord> {
    Ok(sample_final(sim, seed, trajectory)?.0)
}

/// Draws one trajectory and also returns the final state.
pub fn sample_final<S: Simulator>(
    sim: &S,
    seed: u64,
    trajectory: u64,
) -> Result<(MeasurementRecord, S::State)> {
    let mut state = sim.initial()?;
    let mut record = MeasurementRecord::new();
    for i in 0..sim.len() {
        let mut branches = sim.step(state, i, &record)?;
        let chosen = if branches.len() == 1 {
            0
        } else {
            let probs: Vec<f64> = branches.iter().map(|b| b.p).collect();
            pick(&probs, token_uniform(seed, trajectory, i))
        };
        let b = branches.swap_remove(chosen);
        record.push(b.outcome);
        state = b.state;
    }
    Ok((record, state))
}

/// Exact joint output distribution by depth-first branching.
///
/// Fails with [`Error::Infeasible`] once more than `max_leaves` complete
/// records are produced.
pub fn enumerate_with<S: Simulator>(sim: &S, max_leaves: usize) -> Result<OutcomeDistribution> {
    let mut leaves = Vec::new();
    let mut stack = vec![(0usize, sim.initial()?, MeasurementRecord::new(), 1.0f64)];
    while let Some((i, state, record, p)) = stack.pop() {
        if i == sim.len() {
            leaves.push((record, p));
            if leaves.len() > max_leaves {
                return Err(Error::Infeasible(format!(
                    "more than {max_leaves} outcome records"
                )));
            }
            continue;
        }
        let branches = sim.step(state, i, &record)?;
        // reversed so the canonical first branch is explored first
        for b in branches.into_iter().rev() {
            let mut r = record.clone();
            r.push(b.outcome);
            stack.push((i + 1, b.state, r, p * b.p));
        }
    }
    Ok(OutcomeDistribution::from_entries(leaves))
}

/// True when two outputs denote the same measurement result.
pub fn outcomes_match(a: &Outcome, b: &Outcome) -> bool {
    match (a, b) {
        (Outcome::Phase(x), Outcome::Phase(y)) => circular_distance(*x, *y) < KEY_RESOLUTION,
        (Outcome::Residue(x), Outcome::Residue(y)) => x == y,
        _ => false,
    }
}

/// Probability of producing exactly `record`.
///
/// Fails with [`Error::InconsistentRecord`] at the first output that no
/// branch with positive probability can produce.
pub fn replay_with<S: Simulator>(sim: &S, record: &MeasurementRecord) -> Result<f64> {
    if record.len() != sim.len() {
        return Err(Error::Dimension(format!(
            "record has {} outputs for {} tokens",
            record.len(),
            sim.len()
        )));
    }
    let mut state = sim.initial()?;
    let mut prefix = MeasurementRecord::new();
    let mut prob = 1.0;
    for (i, want) in record.outcomes.iter().enumerate() {
        let branches = sim.step(state, i, &prefix)?;
        let b = branches
            .into_iter()
            .find(|b| outcomes_match(&b.outcome, want))
            .ok_or_else(|| Error::InconsistentRecord {
                index: i,
                reason: format!("output {want:?} has probability zero"),
            })?;
        prob *= b.p;
        prefix.push(*want);
        state = b.state;
    }
    Ok(prob)
}

/// A simulation backend selectable at run time.
pub trait Engine: Send + Sync {
    fn name(&self) -> &'static str;

    /// One trajectory, fully determined by `(seed, trajectory)`.
    fn sample(&self, tokens: &[Token], seed: u64, trajectory: u64) -> Result<MeasurementRecord>;

    /// The exact joint distribution of all outputs.
    fn enumerate(&self, tokens: &[Token], max_leaves: usize) -> Result<OutcomeDistribution>;

    /// Probability that the engine emits `record` on `tokens`.
    fn replay(&self, tokens: &[Token], record: &MeasurementRecord) -> Result<f64>;
}

/// Parameters shared by all engine constructors.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub n: usize,
    pub k: usize,
    pub convention: ProjectorConvention,
    /// Weight denominator `d` of the qumode residue lattice.
    pub denominator: i64,
}

impl EngineConfig {
    pub fn new(n: usize, k: usize) -> Self {
        EngineConfig { n, k, convention: ProjectorConvention::Ones, denominator: 1 }
    }

    pub fn with_convention(mut self, c: ProjectorConvention) -> Self {
        self.convention = c;
        self
    }

    pub fn with_denominator(mut self, d: i64) -> Self {
        self.denominator = d;
        self
    }
}

pub type EngineFactory = fn(&EngineConfig) -> Result<Box<dyn Engine>>;

/// Engines by name.
pub struct EngineRegistry {
    factories: BTreeMap<&'static str, EngineFactory>,
}

impl EngineRegistry {
    pub fn empty() -> Self {
        EngineRegistry { factories: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &'static str, factory: EngineFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, config: &EngineConfig) -> Result<Box<dyn Engine>> {
        let f = self.factories.get(name).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "unknown engine {name:?}; available: {}",
                self.names().join(", ")
            ))
        })?;
        f(config)
    }
}

impl Default for EngineRegistry {
    /// The dense oracle and the two scalable engines.
    fn default() -> Self {
        let mut r = EngineRegistry::empty();
        r.register("dense", |c| Ok(Box::new(crate::dense::DenseEngine::new(c)?)));
        r.register("hypergraph", |c| Ok(Box::new(crate::hypergraph::HypergraphEngine::new(c)?)));
        r.register("qumode", |c| Ok(Box::new(crate::qumode::QumodeEngine::new(c)?)));
        r
    }
}

impl fmt::Debug for EngineRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}

/// Implements [`Engine`] for a type with a `simulator(&self, tokens)` method.
macro_rules! impl_engine {
    ($ty:ty, $name:literal) => {
        impl $crate::engine::Engine for $ty {
            fn name(&self) -> &'static str {
                $name
            }

            fn sample(
                &self,
                tokens: &[$crate::types::Token],
                seed: u64,
                trajectory: u64,
            ) -> $crate::error::Result<$crate::types::MeasurementRecord> {
                $crate::engine::sample_with(&self.simulator(tokens)?, seed, trajectory)
            }

            fn enumerate(
                &self,
                tokens: &[$crate::types::Token],
                max_leaves: usize,
            ) -> $crate::error::Result<$crate::types::OutcomeDistribution> {
                $crate::engine::enumerate_with(&self.simulator(tokens)?, max_leaves)
            }

            fn replay(
                &self,
                tokens: &[$crate::types::Token],
                record: &$crate::types::MeasurementRecord,
            ) -> $crate::error::Result<f64> {
                $crate::engine::replay_with(&self.simulator(tokens)?, record)
            }
        }
    };
}
pub(crate) use impl_engine;
