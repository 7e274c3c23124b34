//! Qumode engine on residue lattices.
//!
//! A lattice state `Σ_q exp(iπ Σ_E e_E ∏_{j∈E} q_j) |q⟩` with weights in
//! `(1/d)ℤ` is periodic with period `2d` in every coordinate, so it is kept
//! exactly as weight numerators modulo `2d` and, once at most `k` modes are
//! live, as amplitudes over `(2d)^k` residues. Position measurements report
//! the residue class.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::contextuality::compute_r;
use crate::engine::{
    impl_engine, recap_outcome, recap_slots, sample_final, Branch, EngineConfig, Simulator,
};
use crate::error::{Error, Result};
use crate::phase::wrap_phase;
use crate::statevector::{measurement_branches, DenseState, Spectrum};
use crate::types::{Hyperedge, MeasurementRecord, Outcome, Setting, Token};

const INT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeStatus {
    /// Position eigenstate `|q = 0⟩`.
    SqueezedQ0,
    /// Uniform lattice superposition carrying the hypergraph phases.
    Gkp,
    /// Position measured; the value is the residue class.
    MeasuredOut(i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Stage {
    Prep,
    Gates,
    Recap,
    Measure,
}

fn as_integer(x: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() < INT_TOL).then_some(r as i64)
}

/// Outcome pair `(phase_R, phase_X)`, its probability and the state after both.
pub type PairBranch = ((f64, f64), f64, LatticeState);

#[derive(Clone, Debug)]
pub struct LatticeState {
    d: i64,
    modes: Vec<ModeStatus>,
    prepared: Vec<bool>,
    /// Weight numerators over `d`, reduced modulo `2d`.
    graph: BTreeMap<Hyperedge, i64>,
    global: i64,
    stage: Stage,
    live: Vec<usize>,
    residual: Option<DenseState>,
    peak_entries: usize,
}

impl LatticeState {
    pub fn new(n: usize, d: i64) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidArgument(format!("denominator must be ≥ 1, got {d}")));
        }
        Ok(LatticeState {
            d,
            modes: vec![ModeStatus::SqueezedQ0; n],
            prepared: vec![false; n],
            graph: BTreeMap::new(),
            global: 0,
            stage: Stage::Prep,
            live: Vec::new(),
            residual: None,
            peak_entries: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.modes.len()
    }

    /// Residue period `2d`.
    pub fn period(&self) -> i64 {
        2 * self.d
    }

    pub fn modes(&self) -> &[ModeStatus] {
        &self.modes
    }

    /// Weight of `e` as a fraction `numerator / d`.
    pub fn weight_numerator(&self, e: &Hyperedge) -> i64 {
        self.graph.get(e).copied().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.graph.len()
    }

    pub fn peak_entries(&self) -> usize {
        self.peak_entries
    }

    /// Amplitudes of the live modes, once expanded.
    pub fn residual(&self) -> Option<(&[usize], &DenseState)> {
        self.residual.as_ref().map(|s| (self.live.as_slice(), s))
    }

    fn check_mode(&self, m: usize) -> Result<()> {
        if m >= self.n() {
            return Err(Error::OutOfRange { index: m, n: self.n() });
        }
        Ok(())
    }

    fn add_numerator(&mut self, e: Hyperedge, a: i64) {
        let p = self.period();
        let total = (self.weight_numerator(&e) + a).rem_euclid(p);
        if total == 0 {
            self.graph.remove(&e);
        } else {
            self.graph.insert(e, total);
        }
        self.peak_entries = self.peak_entries.max(self.graph.len());
    }

    fn add_global(&mut self, a: i64) {
        self.global = (self.global + a).rem_euclid(self.period());
    }

    /// Numerator `e·d`, or a denominator error.
    pub fn numerator_of(&self, e: f64) -> Result<i64> {
        as_integer(e * self.d as f64).ok_or(Error::Denominator { value: e, denominator: self.d })
    }

    /// Measurement of `exp(2iυp̂)` on a squeezed mode: `(phase, p, state)`.
    ///
    /// `υ = 0` is the identity. For `υ = ±1` the continuous outcome is
    /// resolved into the `2d` classes compatible with the lattice: class `c`
    /// leaves the lattice state with single-mode weight `c/d` and reports the
    /// phase `πυc/d`.
    pub fn prep_gkp(&self, mode: usize, upsilon: f64) -> Result<Vec<(f64, f64, Self)>> {
        self.check_mode(mode)?;
        if self.prepared[mode] || self.modes[mode] != ModeStatus::SqueezedQ0 {
            return Err(Error::Precondition(format!("mode {} already prepared", mode + 1)));
        }
        let u = match as_integer(upsilon) {
            Some(u) if u.abs() <= 1 => u,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "qumode preparation supports υ ∈ {{0, ±1}}, got {upsilon}"
                )))
            }
        };
        let mut base = self.clone();
        base.prepared[mode] = true;
        if u == 0 {
            return Ok(vec![(0.0, 1.0, base)]);
        }
        base.modes[mode] = ModeStatus::Gkp;
        let classes = self.period();
        let mut out: Vec<(f64, f64, Self)> = (0..classes)
            .map(|c| {
                let mut s = base.clone();
                s.add_numerator(Hyperedge::single(mode), c);
                let phase = wrap_phase(PI * (u * c) as f64 / self.d as f64);
                (phase, 1.0 / classes as f64, s)
            })
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(out)
    }

    /// `exp(iπe ∏ q_j)` on modes that are all lattice states.
    pub fn apply_cv_ckz(&mut self, edge: &Hyperedge, e: f64) -> Result<()> {
        edge.check_range(self.n())?;
        let a = self.numerator_of(e)?;
        if let Some(&v) = edge.vertices().iter().find(|&&v| self.modes[v] != ModeStatus::Gkp) {
            return Err(Error::Precondition(format!(
                "mode {} is not a lattice state ({:?})",
                v + 1,
                self.modes[v]
            )));
        }
        if a != 0 {
            self.add_numerator(edge.clone(), a);
        }
        Ok(())
    }

    /// Adds `a/d · ∏ q_j`, substituting fixed positions.
    fn apply_gate(&mut self, edge: &Hyperedge, e: f64) -> Result<()> {
        edge.check_range(self.n())?;
        let mut a = self.numerator_of(e)?;
        let mut rest = Vec::new();
        for &v in edge.vertices() {
            match self.modes[v] {
                ModeStatus::SqueezedQ0 => return Ok(()),
                ModeStatus::MeasuredOut(r) => a *= r,
                ModeStatus::Gkp => rest.push(v),
            }
        }
        a = a.rem_euclid(self.period());
        match Hyperedge::new(rest) {
            Ok(e) => self.add_numerator(e, a),
            Err(_) => self.add_global(a),
        }
        Ok(())
    }

    /// Exact position measurement of `mode`: `(residue, p, state)`.
    pub fn measure_q(&self, mode: usize) -> Result<Vec<(i64, f64, Self)>> {
        self.check_mode(mode)?;
        match self.modes[mode] {
            ModeStatus::MeasuredOut(_) => {
                Err(Error::Precondition(format!("mode {} already measured", mode + 1)))
            }
            ModeStatus::SqueezedQ0 => {
                let mut s = self.clone();
                s.modes[mode] = ModeStatus::MeasuredOut(0);
                Ok(vec![(0, 1.0, s)])
            }
            ModeStatus::Gkp => {
                let touching: Vec<(Hyperedge, i64)> = self
                    .graph
                    .iter()
                    .filter(|(e, _)| e.contains(mode))
                    .map(|(e, a)| (e.clone(), *a))
                    .collect();
                let classes = self.period();
                Ok((0..classes)
                    .map(|r| {
                        let mut s = self.clone();
                        s.modes[mode] = ModeStatus::MeasuredOut(r);
                        for (e, a) in &touching {
                            s.graph.remove(e);
                            let shifted = (a * r).rem_euclid(classes);
                            match e.without(mode) {
                                Some(rest) => s.add_numerator(rest, shifted),
                                None => s.add_global(shifted),
                            }
                        }
                        (r, 1.0 / classes as f64, s)
                    })
                    .collect())
            }
        }
    }

    /// Expands the live modes into residue amplitudes. Fails when more than
    /// `k` modes are live.
    pub fn expand(&mut self, k: usize) -> Result<()> {
        if self.residual.is_some() {
            return Ok(());
        }
        let live: Vec<usize> = (0..self.n())
            .filter(|&m| !matches!(self.modes[m], ModeStatus::MeasuredOut(_)))
            .collect();
        if live.len() > k {
            return Err(Error::Precondition(format!(
                "{} modes are still live, at most k = {k} can be expanded",
                live.len()
            )));
        }
        let dim = self.period() as usize;
        let total = dim.pow(live.len() as u32);
        let edges: Vec<(Vec<usize>, i64)> = self
            .graph
            .iter()
            .map(|(e, a)| {
                let pos = e
                    .vertices()
                    .iter()
                    .map(|v| live.binary_search(v).expect("edge on live mode"))
                    .collect();
                (pos, *a)
            })
            .collect();
        let amps: Vec<C64> = (0..total)
            .map(|x| {
                let digits: Vec<i64> =
                    (0..live.len()).map(|j| ((x / dim.pow(j as u32)) % dim) as i64).collect();
                let squeezed_off = live
                    .iter()
                    .zip(&digits)
                    .any(|(&m, &q)| self.modes[m] == ModeStatus::SqueezedQ0 && q != 0);
                if squeezed_off {
                    return C64::new(0.0, 0.0);
                }
                let num: i64 = self.global
                    + edges
                        .iter()
                        .map(|(pos, a)| a * pos.iter().map(|&j| digits[j]).product::<i64>())
                        .sum::<i64>();
                C64::from_polar(1.0, PI * num.rem_euclid(self.period()) as f64 / self.d as f64)
            })
            .collect();
        self.residual = Some(DenseState::from_amplitudes(live.len(), dim, amps)?);
        self.live = live;
        Ok(())
    }

    fn sites_of(&self, beta: &Hyperedge) -> Result<Vec<usize>> {
        beta.vertices()
            .iter()
            .map(|&v| {
                self.live.binary_search(&v).map_err(|_| {
                    Error::Precondition(format!("mode {} was already measured out", v + 1))
                })
            })
            .collect()
    }

    /// Branches of measuring a residue-lattice unitary on `beta`.
    fn measure_unitary(
        &self,
        beta: &Hyperedge,
        spec: &Spectrum,
    ) -> Result<Vec<(f64, f64, Self)>> {
        let dense = self.residual.as_ref().expect("expanded");
        let sites = self.sites_of(beta)?;
        Ok(measurement_branches(dense, &sites, spec)?
            .into_iter()
            .map(|(ph, p, st)| {
                let mut s = self.clone();
                s.residual = Some(st);
                (ph, p, s)
            })
            .collect())
    }

    /// Measures `exp(iπ(R−1))` and then `∏ X_j` on exactly the modes of
    /// `edge`: `((phase_R, phase_X), p, state)` over both outcomes.
    pub fn measure_r_then_xproduct(&self, edge: &Hyperedge) -> Result<Vec<PairBranch>> {
        let mut s = self.clone();
        s.expand(edge.len())?;
        if s.live != edge.vertices() {
            return Err(Error::Precondition(format!(
                "live modes {:?} differ from edge {edge}",
                s.live.iter().map(|v| v + 1).collect::<Vec<_>>()
            )));
        }
        let k = edge.len();
        let r = compute_r(k, Setting::Qumode)?;
        let mut theta = BTreeMap::new();
        for (w, c) in r.terms() {
            theta.insert(w.iter().map(|&j| edge.vertices()[j]).collect(), -PI * c as f64);
        }
        let m_op = qumode_g_unitary(edge, &vec![0.0; k], &theta, self.d)?;
        let x_op = qumode_g_unitary(edge, &vec![2.0; k], &BTreeMap::new(), self.d)?;
        let (m_spec, x_spec) = (Spectrum::of(&m_op)?, Spectrum::of(&x_op)?);
        let mut out = Vec::new();
        for (pr, p1, s1) in s.measure_unitary(edge, &m_spec)? {
            for (px, p2, s2) in s1.measure_unitary(edge, &x_spec)? {
                out.push(((pr, px), p1 * p2, s2));
            }
        }
        Ok(out)
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

/// `exp(-iΣφ_j p̂_j) · exp(-iΣ_w θ_w ∏_{j∈w} q̂_j)` on residues modulo `2d`.
///
/// `exp(-iφp̂)` shifts the position by `φ/2`, so every `φ_j` must be an even
/// integer, and every non-empty `θ_w` a multiple of `π/d` for the operator to
/// respect the residue quotient.
pub fn qumode_g_unitary(
    beta: &Hyperedge,
    phi: &[f64],
    theta: &BTreeMap<Vec<usize>, f64>,
    d: i64,
) -> Result<DMatrix<C64>> {
    let m = beta.len();
    if phi.len() != m {
        return Err(Error::Dimension(format!("phi has length {} for {m} modes", phi.len())));
    }
    let period = 2 * d;
    let shifts = phi
        .iter()
        .map(|&f| {
            as_integer(f / 2.0).ok_or_else(|| {
                Error::InvalidArgument(format!("φ = {f} is not an integer lattice shift"))
            })
        })
        .collect::<Result<Vec<i64>>>()?;
    let mut terms = Vec::new();
    let mut global = 0.0;
    for (w, &t) in theta {
        if w.is_empty() {
            global += t;
            continue;
        }
        let num = as_integer(t * d as f64 / PI).ok_or_else(|| {
            Error::InvalidArgument(format!("θ = {t} is not a multiple of π/{d}"))
        })?;
        let pos = w
            .iter()
            .map(|v| {
                beta.position(*v).ok_or_else(|| {
                    Error::Structure(format!("theta key {w:?} is not a subset of beta {beta}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        terms.push((pos, num));
    }
    let dim = period as usize;
    let total = dim.pow(m as u32);
    let digits = |x: usize| -> Vec<i64> {
        (0..m).map(|j| ((x / dim.pow(j as u32)) % dim) as i64).collect()
    };
    let index = |ds: &[i64]| -> usize {
        ds.iter().enumerate().map(|(j, &q)| q as usize * dim.pow(j as u32)).sum()
    };
    let mut u = DMatrix::<C64>::zeros(total, total);
    for x in 0..total {
        let q = digits(x);
        let num: i64 = terms
            .iter()
            .map(|(pos, c)| c * pos.iter().map(|&j| q[j]).product::<i64>())
            .sum();
        let angle = global + PI * num.rem_euclid(period) as f64 / d as f64;
        let target: Vec<i64> =
            q.iter().zip(&shifts).map(|(a, s)| (a + s).rem_euclid(period)).collect();
        u[(index(&target), x)] = C64::from_polar(1.0, -angle);
    }
    Ok(u)
}

#[derive(Clone, Debug)]
pub struct QumodeEngine {
    n: usize,
    k: usize,
    d: i64,
}

impl QumodeEngine {
    pub fn new(cfg: &EngineConfig) -> Result<Self> {
        if cfg.denominator < 1 {
            return Err(Error::InvalidArgument(format!(
                "qumode engine needs denominator ≥ 1, got {}",
                cfg.denominator
            )));
        }
        if cfg.k == 0 || cfg.k > cfg.n.max(1) {
            return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got k = {}", cfg.k)));
        }
        Ok(QumodeEngine { n: cfg.n, k: cfg.k, d: cfg.denominator })
    }

    pub fn simulator<'a>(&self, tokens: &'a [Token]) -> Result<QumodeSimulator<'a>> {
        let mut spectra = Vec::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            t.validate(self.n, self.k)?;
            if t.alpha.is_some() && t.beta.is_some() {
                return Err(Error::Grammar {
                    index: i,
                    reason: "a token may carry a gate or a measurement, not both".into(),
                });
            }
            let general = t.beta.is_some() && !t.exact_q && !t.is_prep_form() && t.scalar_phase().is_none();
            spectra.push(if general {
                let b = t.beta.as_ref().expect("beta present");
                Some(Spectrum::of(&qumode_g_unitary(b, &t.phi, &t.theta, self.d)?)?)
            } else {
                None
            });
        }
        Ok(QumodeSimulator {
            n: self.n,
            k: self.k,
            d: self.d,
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

impl_engine!(QumodeEngine, "qumode");

pub struct QumodeSimulator<'a> {
    n: usize,
    k: usize,
    d: i64,
    tokens: &'a [Token],
    spectra: Vec<Option<Spectrum>>,
    recap: Vec<Option<usize>>,
}

fn phase_branches(v: Vec<(f64, f64, LatticeState)>) -> Vec<Branch<LatticeState>> {
    v.into_iter().map(|(ph, p, s)| Branch { outcome: Outcome::Phase(ph), p, state: s }).collect()
}

impl Simulator for QumodeSimulator<'_> {
    type State = LatticeState;

    fn len(&self) -> usize {
        self.tokens.len()
    }

    fn initial(&self) -> Result<LatticeState> {
        LatticeState::new(self.n, self.d)
    }

    fn step(
        &self,
        mut state: LatticeState,
        index: usize,
        record: &MeasurementRecord,
    ) -> Result<Vec<Branch<LatticeState>>> {
        if let Some(slot) = self.recap[index] {
            state.advance(index, Stage::Recap)?;
            return Ok(Branch::certain(recap_outcome(index, slot, record)?, state));
        }
        let t = &self.tokens[index];
        if let Some(a) = &t.alpha {
            state.advance(index, Stage::Gates)?;
            state.apply_gate(a, -t.gamma / PI)?;
            return Ok(Branch::certain(Outcome::Phase(0.0), state));
        }
        let beta = t.beta.as_ref().expect("non-recap token has alpha or beta");
        if state.stage == Stage::Prep && t.is_prep_form() {
            let m = beta.vertices()[0];
            return Ok(phase_branches(state.prep_gkp(m, -t.phi[0] / 2.0)?));
        }
        state.advance(index, Stage::Measure)?;
        if t.exact_q {
            let m = beta.vertices()[0];
            if state.residual.is_some() {
                return Err(Error::Grammar {
                    index,
                    reason: "position measurement after the residual expansion".into(),
                });
            }
            return Ok(state
                .measure_q(m)?
                .into_iter()
                .map(|(r, p, s)| Branch { outcome: Outcome::Residue(r), p, state: s })
                .collect());
        }
        if let Some(theta0) = t.scalar_phase() {
            return Ok(Branch::certain(Outcome::Phase(wrap_phase(-theta0)), state));
        }
        state.expand(self.k)?;
        let spec = self.spectra[index].as_ref().expect("spectrum cached");
        Ok(phase_branches(state.measure_unitary(beta, spec)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;

    fn e(v: &[usize]) -> Hyperedge {
        Hyperedge::new(v.iter().copied()).unwrap()
    }

    fn lattice(n: usize, d: i64) -> LatticeState {
        let mut s = LatticeState::new(n, d).unwrap();
        for m in 0..n {
            s.modes[m] = ModeStatus::Gkp;
            s.prepared[m] = true;
        }
        s
    }

    #[test]
    fn prep_examples() {
        let s = LatticeState::new(2, 1).unwrap();
        let b = s.prep_gkp(0, 1.0).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].0, 0.0);
        assert_eq!(b[0].2.modes[0], ModeStatus::Gkp);
        assert_eq!(b[0].2.edge_count(), 0);
        let z = s.prep_gkp(0, 0.0).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z[0].0, 0.0);
        let measured = s.measure_q(0).unwrap().remove(0).2;
        assert!(measured.prep_gkp(0, 1.0).is_err());
        assert!(s.prep_gkp(1, 0.5).is_err());
    }

    #[test]
    fn gate_examples() {
        let mut s = lattice(2, 1);
        s.apply_cv_ckz(&e(&[0, 1]), 0.0).unwrap();
        assert_eq!(s.edge_count(), 0);
        s.apply_cv_ckz(&e(&[0, 1]), 1.0).unwrap();
        assert_eq!(s.weight_numerator(&e(&[0, 1])), 1);
        assert!(matches!(
            s.apply_cv_ckz(&e(&[0, 1]), 0.5),
            Err(Error::Denominator { .. })
        ));
        // sign (-1)^{q1 q2} on residues
        s.expand(2).unwrap();
        let a = s.residual.as_ref().unwrap().amplitudes();
        assert!((a[3].re + 0.5).abs() < 1e-12 && (a[1].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn measure_q_examples() {
        let s = lattice(1, 1);
        let b = s.measure_q(0).unwrap();
        assert_eq!(b.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1]);
        assert!(b.iter().all(|x| x.1 == 0.5));

        let mut g = lattice(2, 1);
        g.apply_cv_ckz(&e(&[0, 1]), 1.0).unwrap();
        let b = g.measure_q(0).unwrap();
        assert_eq!(b[0].2.edge_count(), 0);
        assert_eq!(b[1].2.weight_numerator(&e(&[1])), 1);

        let sq = LatticeState::new(1, 3).unwrap().measure_q(0).unwrap();
        assert_eq!(sq.len(), 1);
        assert_eq!(sq[0].0, 0);
    }

    #[test]
    fn r_then_x_separates_integer_shifted_weights() {
        for (w1, w2) in [(0.0, 1.0), (1.0, 2.0), (3.0, 2.0)] {
            let mut a = lattice(2, 1);
            a.apply_cv_ckz(&e(&[0, 1]), w1).unwrap();
            let mut b = lattice(2, 1);
            b.apply_cv_ckz(&e(&[0, 1]), w2).unwrap();
            let xa: Vec<_> = a
                .measure_r_then_xproduct(&e(&[0, 1]))
                .unwrap()
                .into_iter()
                .filter(|x| x.0 .0.abs() < 1e-9)
                .map(|x| (x.0 .1, x.1))
                .collect();
            let xb: Vec<_> = b
                .measure_r_then_xproduct(&e(&[0, 1]))
                .unwrap()
                .into_iter()
                .filter(|x| x.0 .0.abs() < 1e-9)
                .map(|x| (x.0 .1, x.1))
                .collect();
            assert_eq!(xa.len(), 1);
            assert_eq!(xb.len(), 1);
            assert!((crate::phase::circular_distance(xa[0].0, xb[0].0) - PI).abs() < 1e-9);
        }
        // position-zero reference: R outcome is trivial
        let mut z0 = LatticeState::new(2, 1).unwrap();
        z0.prepared = vec![true; 2];
        let z = z0.measure_r_then_xproduct(&e(&[0, 1])).unwrap();
        let p_trivial: f64 = z.iter().filter(|x| x.0 .0.abs() < 1e-9).map(|x| x.1).sum();
        assert!((p_trivial - 1.0).abs() < 1e-12);
    }

    #[test]
    fn engine_runs_full_grammar() {
        let toks = vec![
            Token::x_rotation(0, -2.0),
            Token::x_rotation(1, -2.0),
            Token::x_rotation(2, -2.0),
            Token::gate(e(&[0, 1]), -PI),
            Token::gate(e(&[1, 2]), -PI),
            Token::recap(),
            Token::exact_q(0),
            Token::measure(e(&[1, 2]), vec![2.0, 2.0], BTreeMap::new()),
        ];
        let eng = QumodeEngine::new(&EngineConfig::new(3, 2).with_denominator(2)).unwrap();
        let d = eng.enumerate(&toks, 100_000).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-10);
        let bad = QumodeEngine::new(&EngineConfig::new(3, 2)).unwrap();
        let half = vec![
            Token::x_rotation(0, -2.0),
            Token::x_rotation(1, -2.0),
            Token::gate(e(&[0, 1]), -PI / 2.0),
        ];
        assert!(matches!(bad.enumerate(&half, 100), Err(Error::Denominator { .. })));
    }
}
