//! The dense statevector engine: the ground truth every other engine is
//! checked against.

use crate::engine::{impl_engine, recap_outcome, recap_slots, Branch, EngineConfig, Simulator};
use crate::error::{Error, Result};
use crate::statevector::{
    build_g_unitary, measurement_branches, DenseState, ProjectorConvention, Spectrum,
    MAX_DENSE_QUBITS,
};
use crate::types::{MeasurementRecord, Outcome, Token};

#[derive(Clone, Debug)]
pub struct DenseEngine {
    n: usize,
    k: usize,
    convention: ProjectorConvention,
}

impl DenseEngine {
    pub fn new(cfg: &EngineConfig) -> Result<Self> {
        if cfg.n > MAX_DENSE_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "dense engine supports at most {MAX_DENSE_QUBITS} qubits, got {}",
                cfg.n
            )));
        }
        Ok(DenseEngine { n: cfg.n, k: cfg.k, convention: cfg.convention })
    }

    pub fn simulator<'a>(&self, tokens: &'a [Token]) -> Result<DenseSimulator<'a>> {
        let mut spectra = Vec::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            t.validate(self.n, self.k)?;
            if t.exact_q {
                return Err(Error::Grammar {
                    index: i,
                    reason: "position measurements need the qumode engine".into(),
                });
            }
            spectra.push(match &t.beta {
                Some(b) => Some(Spectrum::of(&build_g_unitary(b, &t.phi, &t.theta)?)?),
                None => None,
            });
        }
        Ok(DenseSimulator {
            n: self.n,
            convention: self.convention,
            tokens,
            spectra,
            recap: recap_slots(tokens),
        })
    }
}

impl_engine!(DenseEngine, "dense");

pub struct DenseSimulator<'a> {
    n: usize,
    convention: ProjectorConvention,
    tokens: &'a [Token],
    spectra: Vec<Option<Spectrum>>,
    recap: Vec<Option<usize>>,
}

impl Simulator for DenseSimulator<'_> {
    type State = DenseState;

    fn len(&self) -> usize {
        self.tokens.len()
    }

    fn initial(&self) -> Result<DenseState> {
        DenseState::qubits(self.n)
    }

    fn step(
        &self,
        mut state: DenseState,
        index: usize,
        record: &MeasurementRecord,
    ) -> Result<Vec<Branch<DenseState>>> {
        if let Some(slot) = self.recap[index] {
            return Ok(Branch::certain(recap_outcome(index, slot, record)?, state));
        }
        let t = &self.tokens[index];
        if let Some(a) = &t.alpha {
            state.apply_ckz(a, t.gamma, self.convention)?;
        }
        match (&t.beta, &self.spectra[index]) {
            (Some(b), Some(spec)) => Ok(measurement_branches(&state, b.vertices(), spec)?
                .into_iter()
                .map(|(phase, p, state)| Branch { outcome: Outcome::Phase(phase), p, state })
                .collect()),
            _ => Ok(Branch::certain(Outcome::Phase(0.0), state)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use crate::types::{Hyperedge, MeasurementRecord, OutcomeDistribution};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn engine(n: usize) -> DenseEngine {
        DenseEngine::new(&EngineConfig::new(n, 2)).unwrap()
    }

    #[test]
    fn empty_sequence_has_single_empty_record() {
        let d = engine(2).enumerate(&[], 10).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.entries()[0].0, MeasurementRecord::new());
        assert_eq!(d.entries()[0].1, 1.0);
    }

    #[test]
    fn prep_then_zz_after_zero_state() {
        // |00⟩, then Z1Z2 as exp(iπ(n1+n2)) has outcome π with probability zero
        let e = Hyperedge::new([0, 1]).unwrap();
        let mut th = std::collections::BTreeMap::new();
        th.insert(vec![0], PI);
        th.insert(vec![1], PI);
        let toks = vec![Token::measure(e, vec![0.0, 0.0], th)];
        let d = engine(2).enumerate(&toks, 10).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d.entries()[0].0.outcomes[0].value().abs() < 1e-12);
    }

    #[test]
    fn sampling_tracks_enumeration() {
        let toks = vec![
            Token::x_rotation(0, -FRAC_PI_2),
            Token::x_rotation(1, -0.7),
            Token::gate(Hyperedge::new([0, 1]).unwrap(), -PI * 0.3),
            Token::measure(
                Hyperedge::new([0, 1]).unwrap(),
                vec![FRAC_PI_4, 0.2],
                [(vec![0, 1], 0.9)].into_iter().collect(),
            ),
        ];
        let eng = engine(2);
        let exact = eng.enumerate(&toks, 1000).unwrap();
        let trials = 100_000;
        let sim = eng.simulator(&toks).unwrap();
        let samples: Vec<_> = (0..trials)
            .map(|t| (crate::engine::sample_with(&sim, 5, t).unwrap(), 1.0 / trials as f64))
            .collect();
        let empirical = OutcomeDistribution::from_entries(samples);
        for (r, p) in exact.entries() {
            let q = empirical.probability_of(r);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((p - q).abs() < 3.0 * sigma + 1e-9, "p={p} q={q}");
        }
        let total: f64 = exact.entries().iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn recap_repeats_outputs() {
        let toks = vec![Token::x_rotation(0, -FRAC_PI_2), Token::recap()];
        let d = engine(1).enumerate(&toks, 10).unwrap();
        for (r, _) in d.entries() {
            assert_eq!(r.outcomes[0], r.outcomes[1]);
        }
    }
}
