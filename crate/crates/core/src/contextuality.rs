//! Magic-square parity checks, the stabilizer-product polynomial `R`, and
//! antidistinguishing measurement sequences with their zero-product
//! certificates.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::phase::PROB_FLOOR;
use crate::types::{
    k_subsets_colex, Hyperedge, MeasurementRecord, MultilinearPoly, Outcome, OutcomeKey, Setting,
    Token, WeightedHypergraph,
};

/// `i^phase · ∏_j X_j^{x_j} Z_j^{z_j}` on up to 64 qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub n: usize,
    pub x: u64,
    pub z: u64,
    /// Exponent of `i`, modulo 4.
    pub phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { n, x: 0, z: 0, phase: 0 }
    }

    /// Parses strings such as `"X1Z2"`, `"-X1Z1X2Z2"` or `"I"`. Factors are
    /// multiplied left to right, so `"Z1X1"` is `-X1Z1`.
    pub fn parse(n: usize, s: &str) -> Result<Self> {
        let mut out = PauliString::identity(n);
        let mut rest = s.trim();
        if let Some(r) = rest.strip_prefix('-') {
            out.phase = 2;
            rest = r;
        }
        let chars: Vec<char> = rest.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let op = chars[i];
            i += 1;
            if op == 'I' {
                continue;
            }
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let q: usize = chars[start..i]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad Pauli string {s:?}")))?;
            if q == 0 || q > n {
                return Err(Error::OutOfRange { index: q, n });
            }
            let bit = 1u64 << (q - 1);
            let factor = match op {
                'X' => PauliString { n, x: bit, z: 0, phase: 0 },
                'Z' => PauliString { n, x: 0, z: bit, phase: 0 },
                // Y = iXZ
                'Y' => PauliString { n, x: bit, z: bit, phase: 1 },
                _ => return Err(Error::InvalidArgument(format!("bad Pauli string {s:?}"))),
            };
            out = out.mul(&factor);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &PauliString) -> PauliString {
        // Z^a X^b = (-1)^{ab} X^b Z^a on each qubit
        let swaps = (self.z & other.x).count_ones() as u8;
        PauliString {
            n: self.n.max(other.n),
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: (self.phase + other.phase + 2 * swaps) % 4,
        }
    }

    pub fn negated(&self) -> PauliString {
        PauliString { phase: (self.phase + 2) % 4, ..*self }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0 && self.phase == 0
    }

    pub fn is_minus_identity(&self) -> bool {
        self.x == 0 && self.z == 0 && self.phase == 2
    }

    /// Dense `2^n × 2^n` matrix; bit `j` of a basis index is qubit `j+1`.
    pub fn to_matrix(&self) -> DMatrix<C64> {
        let dim = 1usize << self.n;
        let scalar = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)]
            [self.phase as usize];
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            // Z acts first on |col⟩, then X flips
            let sign = if ((col as u64) & self.z).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            let row = col ^ self.x as usize;
            m[(row, col)] = scalar * sign;
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["", "i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}")?;
        if self.x == 0 && self.z == 0 {
            return write!(f, "I");
        }
        for q in 0..self.n {
            if self.x >> q & 1 == 1 {
                write!(f, "X{}", q + 1)?;
            }
            if self.z >> q & 1 == 1 {
                write!(f, "Z{}", q + 1)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MagicSquare {
    pub entries: [[PauliString; 3]; 3],
}

impl MagicSquare {
    /// The two-qubit square whose rows stabilize `|++⟩`, `CZ|++⟩` and `|00⟩`.
    pub fn mermin_peres() -> Self {
        let p = |s| PauliString::parse(2, s).expect("static Pauli string");
        MagicSquare {
            entries: [
                [p("X1"), p("X2"), p("X1X2")],
                [p("X1Z2"), p("Z1X2"), p("-X1Z1X2Z2")],
                [p("Z2"), p("Z1"), p("Z1Z2")],
            ],
        }
    }

    pub fn identity(n: usize) -> Self {
        MagicSquare { entries: [[PauliString::identity(n); 3]; 3] }
    }

    /// The three lines of each orientation: rows first, then columns.
    pub fn lines(&self) -> Vec<(String, [PauliString; 3])> {
        let mut out = Vec::with_capacity(6);
        for r in 0..3 {
            out.push((format!("row {}", r + 1), self.entries[r]));
        }
        for c in 0..3 {
            out.push((
                format!("column {}", c + 1),
                [self.entries[0][c], self.entries[1][c], self.entries[2][c]],
            ));
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LineReport {
    pub line: String,
    pub commuting: bool,
    pub product: String,
    /// +1 for `+I`, -1 for `-I`, 0 for anything else.
    pub parity: i8,
}

#[derive(Clone, Debug, Serialize)]
pub struct MagicSquareReport {
    pub lines: Vec<LineReport>,
}

impl MagicSquareReport {
    pub fn parities(&self) -> Vec<i8> {
        self.lines.iter().map(|l| l.parity).collect()
    }

    pub fn all_commuting(&self) -> bool {
        self.lines.iter().all(|l| l.commuting)
    }

    /// Commuting lines, rows `+I`, columns `+I, +I, -I`.
    pub fn is_contextual_pattern(&self) -> bool {
        self.all_commuting() && self.parities() == [1, 1, 1, 1, 1, -1]
    }
}

pub fn verify_magic_square(sq: &MagicSquare) -> MagicSquareReport {
    let lines = sq
        .lines()
        .into_iter()
        .map(|(name, ops)| {
            let commuting = (0..3).all(|i| (i + 1..3).all(|j| ops[i].commutes_with(&ops[j])));
            let product = ops[0].mul(&ops[1]).mul(&ops[2]);
            let parity = if product.is_identity() {
                1
            } else if product.is_minus_identity() {
                -1
            } else {
                0
            };
            LineReport { line: name, commuting, product: product.to_string(), parity }
        })
        .collect();
    MagicSquareReport { lines }
}

/// The polynomial `R` with `∏_{i∈v̄} s_i = (∏_{i∈v̄} X_i) exp(iπ e R)` for a
/// single `k`-edge of weight `e`, in local variables `0..k`.
///
/// Built by moving each `X_i` to the left through the accumulated phase:
/// for qubits `X n_j X = 1 - n_j` and the vertex stabilizer contributes
/// `n_{v̄∖i} - 2 n_{v̄}`; for qumodes `X q_j X† = q_j + 1` and the
/// contribution is `q_{v̄∖i}`.
pub fn compute_r(k: usize, setting: Setting) -> Result<MultilinearPoly> {
    if k == 0 {
        return Err(Error::InvalidArgument("R needs k ≥ 1".into()));
    }
    let all: Vec<usize> = (0..k).collect();
    let mut q = MultilinearPoly::default();
    for i in 0..k {
        let rest: Vec<usize> = all.iter().copied().filter(|&j| j != i).collect();
        let mut p = MultilinearPoly::default();
        p.add_term(rest, 1);
        q = match setting {
            Setting::Qubit => {
                p.add_term(all.clone(), -2);
                q.flip(i)
            }
            Setting::Qumode => q.shift(i),
        };
        q.add(&p);
    }
    if setting == Setting::Qubit {
        // Hermiticity of the stabilizer product: flipping every variable negates R
        let mut l = q.clone();
        for j in 0..k {
            l = l.flip(j);
        }
        if l != q.scaled(-1) {
            return Err(Error::Structure(format!("R for k = {k} fails L = -R")));
        }
    }
    Ok(q)
}

/// [`compute_r`] with variables renamed to the vertices of `edge`.
pub fn compute_r_on(edge: &Hyperedge, setting: Setting) -> Result<MultilinearPoly> {
    let local = compute_r(edge.len(), setting)?;
    let mut out = MultilinearPoly::constant(local.constant);
    for (vars, c) in local.terms() {
        out.add_term(vars.iter().map(|&j| edge.vertices()[j]).collect(), c);
    }
    Ok(out)
}

fn bits(x: usize, k: usize) -> Vec<bool> {
    (0..k).map(|j| x >> j & 1 == 1).collect()
}

fn x_all(k: usize) -> DMatrix<C64> {
    PauliString { n: k, x: (1u64 << k) - 1, z: 0, phase: 0 }.to_matrix()
}

/// `∏_i U X_i U†` for `U = exp(iπ e n_1⋯n_k)`, by direct matrix products.
pub fn stabilizer_product_direct(k: usize, e: f64) -> DMatrix<C64> {
    let dim = 1usize << k;
    let full = dim - 1;
    let u = DMatrix::from_fn(dim, dim, |r, c| {
        if r != c {
            C64::new(0.0, 0.0)
        } else if r == full {
            C64::from_polar(1.0, PI * e)
        } else {
            C64::new(1.0, 0.0)
        }
    });
    let mut s = DMatrix::<C64>::identity(dim, dim);
    for i in 0..k {
        let xi = PauliString { n: k, x: 1 << i, z: 0, phase: 0 }.to_matrix();
        s *= &u * xi * u.adjoint();
    }
    s
}

/// `(∏ X) exp(iπ e R)` assembled from the polynomial.
pub fn stabilizer_product_from_r(r: &MultilinearPoly, k: usize, e: f64) -> DMatrix<C64> {
    let dim = 1usize << k;
    let diag = DMatrix::from_fn(dim, dim, |row, col| {
        if row == col {
            C64::from_polar(1.0, PI * e * r.eval(&bits(row, k)) as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    x_all(k) * diag
}

/// Frobenius norm of `[cos(πe(R-1)), ∏X]`.
pub fn commutator_norm(r: &MultilinearPoly, k: usize, e: f64) -> f64 {
    let dim = 1usize << k;
    let m = DMatrix::from_fn(dim, dim, |row, col| {
        if row == col {
            C64::new((PI * e * (r.eval(&bits(row, k)) - 1) as f64).cos(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let x = x_all(k);
    (&m * &x - &x * &m).norm()
}

/// A measurement sequence ruling out one of three candidate states.
#[derive(Clone, Debug)]
pub struct AntidistinguishingSequence {
    /// The edge whose weights differ by one.
    pub edge: Hyperedge,
    pub tokens: Vec<Token>,
}

/// Sequence separating the all-zero state, `psi1` and `psi2`: position
/// (or `Z`) measurements off the chosen edge, `exp(iπ(R-1))` on it, and the
/// stabilizer product of `psi1` on it.
pub fn build_antidistinguishing_sequence(
    psi1: &WeightedHypergraph,
    psi2: &WeightedHypergraph,
    setting: Setting,
) -> Result<AntidistinguishingSequence> {
    let (n, k) = (psi1.n(), psi1.k());
    if psi2.n() != n || psi2.k() != k {
        return Err(Error::Dimension("states have different (n, k)".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ n, got k = {k}")));
    }
    for g in [psi1, psi2] {
        if let Some((e, _)) = g.iter().find(|(e, _)| e.len() != k) {
            return Err(Error::Precondition(format!("state is not {k}-uniform: edge {e}")));
        }
    }
    let edge = k_subsets_colex(n, k)
        .into_iter()
        .find(|e| ((psi2.weight(e) - psi1.weight(e)).abs() - 1.0).abs() < 1e-9)
        .ok_or_else(|| Error::Precondition("no hyperedge weight differs by exactly 1".into()))?;
    let e1 = psi1.weight(&edge);
    let mut tokens = Vec::with_capacity(n - k + 2);
    for v in (0..n).filter(|v| !edge.contains(*v)) {
        tokens.push(match setting {
            Setting::Qubit => Token::z_type(v, 1.0),
            Setting::Qumode => Token::exact_q(v),
        });
    }
    tokens.push(r_token(&edge, setting)?);
    tokens.push(stabilizer_token(&edge, e1, setting)?);
    Ok(AntidistinguishingSequence { edge, tokens })
}

/// Measurement of `exp(iπ(R-1))` on `edge`; for qubits its `±1` spectrum
/// is that of `cos(π(R-1))`.
pub fn r_token(edge: &Hyperedge, setting: Setting) -> Result<Token> {
    let r = compute_r_on(edge, setting)?;
    let mut theta = BTreeMap::new();
    if r.constant != 1 {
        theta.insert(Vec::new(), -PI * (r.constant - 1) as f64);
    }
    for (vars, c) in r.terms() {
        theta.insert(vars.clone(), -PI * c as f64);
    }
    Ok(Token::measure(edge.clone(), vec![0.0; edge.len()], theta))
}

/// Measurement of the stabilizer product `(∏X) exp(iπeR)` on `edge`.
pub fn stabilizer_token(edge: &Hyperedge, e: f64, setting: Setting) -> Result<Token> {
    let k = edge.len();
    let r = compute_r_on(edge, setting)?;
    // exp(-iφX) = -iX at φ = π/2, so the qubit form needs a compensating i^k
    let (phi, offset) = match setting {
        Setting::Qubit => (FRAC_PI_2, -(k as f64) * FRAC_PI_2),
        Setting::Qumode => (2.0, 0.0),
    };
    let mut theta = BTreeMap::new();
    theta.insert(Vec::new(), offset - PI * e * r.constant as f64);
    for (vars, c) in r.terms() {
        theta.insert(vars.clone(), -PI * e * c as f64);
    }
    Ok(Token::measure(edge.clone(), vec![phi; k], theta))
}

/// A candidate state: the tokens preparing it and, optionally, the outputs
/// of those tokens to condition on.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub prefix: Vec<Token>,
    pub given: Option<MeasurementRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub max_triple_product: f64,
    pub witness_y: Option<Vec<Outcome>>,
    pub pass: bool,
}

/// Suffix-output distribution of `prefix ⊕ suffix`, conditioned on the
/// prefix outputs when requested.
pub fn suffix_distribution(
    engine: &dyn Engine,
    candidate: &Candidate,
    suffix: &[Token],
    max_leaves: usize,
) -> Result<Vec<(MeasurementRecord, f64)>> {
    let mut full = candidate.prefix.clone();
    full.extend_from_slice(suffix);
    let dist = engine.enumerate(&full, max_leaves)?;
    let start = candidate.prefix.len();
    let positions: Vec<usize> = (start..full.len()).collect();
    let given = candidate.given.as_ref().map(|g| g.key());
    let cond = dist
        .conditional(&positions, |r| match &given {
            Some(g) => r.key()[..start] == g[..],
            None => true,
        })
        .ok_or_else(|| {
            Error::InvalidArgument("conditioning outputs have probability zero".into())
        })?;
    Ok(cond.entries().to_vec())
}

/// Maximum over suffix outputs `y` of the product of the three conditional
/// probabilities. Probabilities below the sampling floor count as zero.
pub fn check_antidistinguishability(
    triple: &[Candidate; 3],
    suffix: &[Token],
    engine: &dyn Engine,
    max_leaves: usize,
) -> Result<Certificate> {
    let dists = triple
        .iter()
        .map(|c| suffix_distribution(engine, c, suffix, max_leaves))
        .collect::<Result<Vec<_>>>()?;
    let maps: Vec<BTreeMap<Vec<OutcomeKey>, (MeasurementRecord, f64)>> = dists
        .into_iter()
        .map(|d| d.into_iter().map(|(r, p)| (r.key(), (r, p))).collect())
        .collect();
    let keys: BTreeSet<&Vec<OutcomeKey>> = maps.iter().flat_map(|m| m.keys()).collect();
    let mut best = 0.0;
    let mut witness = None;
    for key in keys {
        let mut prod = 1.0;
        let mut rec = None;
        for m in &maps {
            match m.get(key) {
                Some((r, p)) if *p >= PROB_FLOOR => {
                    prod *= p;
                    rec = Some(r);
                }
                _ => prod = 0.0,
            }
        }
        if prod > best {
            best = prod;
            witness = rec.map(|r| r.outcomes.clone());
        }
    }
    Ok(Certificate { max_triple_product: best, witness_y: witness, pass: best == 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mermin_peres_square_pattern() {
        let rep = verify_magic_square(&MagicSquare::mermin_peres());
        assert!(rep.all_commuting());
        assert_eq!(rep.parities(), vec![1, 1, 1, 1, 1, -1]);
        assert!(rep.is_contextual_pattern());
    }

    #[test]
    fn identity_square_is_trivial() {
        let rep = verify_magic_square(&MagicSquare::identity(2));
        assert!(rep.all_commuting());
        assert!(rep.parities().iter().all(|&p| p == 1));
    }

    #[test]
    fn sign_flip_changes_its_row_and_column() {
        let base = verify_magic_square(&MagicSquare::mermin_peres()).parities();
        for r in 0..3 {
            for c in 0..3 {
                let mut sq = MagicSquare::mermin_peres();
                sq.entries[r][c] = sq.entries[r][c].negated();
                let flipped = verify_magic_square(&sq).parities();
                let changed: Vec<usize> =
                    (0..6).filter(|&i| flipped[i] != base[i]).collect();
                assert_eq!(changed, vec![r, 3 + c]);
            }
        }
    }

    #[test]
    fn pauli_parse_and_print() {
        let y = PauliString::parse(2, "-X1Z1X2Z2").unwrap();
        assert_eq!(y.to_string(), "-X1Z1X2Z2");
        assert_eq!(PauliString::parse(1, "Z1X1").unwrap().to_string(), "-X1Z1");
        assert!(PauliString::parse(2, "X3").is_err());
    }

    #[test]
    fn r_examples() {
        let r1 = compute_r(1, Setting::Qubit).unwrap();
        assert_eq!((r1.constant, r1.coefficient(&[0])), (1, -2));
        let r2 = compute_r(2, Setting::Qubit).unwrap();
        assert_eq!(r2.constant, 1);
        assert_eq!(r2.coefficient(&[0]), -1);
        assert_eq!(r2.coefficient(&[1]), -1);
        assert_eq!(r2.coefficient(&[0, 1]), 0);
        let q2 = compute_r(2, Setting::Qumode).unwrap();
        assert_eq!((q2.constant, q2.coefficient(&[0]), q2.coefficient(&[1])), (1, 1, 1));
        for k in 1..=4 {
            assert_eq!(compute_r(k, Setting::Qubit).unwrap().constant, 1);
            assert_eq!(compute_r(k, Setting::Qumode).unwrap().constant, 1);
        }
    }

    #[test]
    fn k2_measurement_is_zz() {
        let r = compute_r(2, Setting::Qubit).unwrap();
        let zz = PauliString::parse(2, "Z1Z2").unwrap().to_matrix();
        let m = DMatrix::from_fn(4, 4, |a, b| {
            if a == b {
                C64::new((PI * (r.eval(&bits(a, 2)) - 1) as f64).cos(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!((m - zz).norm() < 1e-12);
    }

    #[test]
    fn n2_sequence_is_zz_then_xx() {
        let psi1 = WeightedHypergraph::new(2, 2);
        let psi2 = WeightedHypergraph::from_entries(2, 2, [(vec![0, 1], 1.0)]).unwrap();
        let seq = build_antidistinguishing_sequence(&psi1, &psi2, Setting::Qubit).unwrap();
        assert_eq!(seq.tokens.len(), 2);
        let zz = crate::statevector::build_g_unitary(&seq.edge, &seq.tokens[0].phi, &seq.tokens[0].theta).unwrap();
        let want = PauliString::parse(2, "Z1Z2").unwrap().to_matrix();
        assert!((zz - want).norm() < 1e-12);
        let xx = crate::statevector::build_g_unitary(&seq.edge, &seq.tokens[1].phi, &seq.tokens[1].theta).unwrap();
        let want = PauliString::parse(2, "X1X2").unwrap().to_matrix();
        assert!((xx - want).norm() < 1e-12);
    }

    #[test]
    fn n4_sequence_shape() {
        let psi1 = WeightedHypergraph::new(4, 2);
        let psi2 = WeightedHypergraph::from_entries(4, 2, [(vec![1, 2], 1.0)]).unwrap();
        let seq = build_antidistinguishing_sequence(&psi1, &psi2, Setting::Qubit).unwrap();
        assert_eq!(seq.edge.to_string(), "{2,3}");
        let targets: Vec<_> = seq.tokens[..2].iter().map(|t| t.z_target().unwrap()).collect();
        assert_eq!(targets, vec![0, 3]);
        assert_eq!(seq.tokens.len(), 4);
    }

    #[test]
    fn weight_difference_of_two_is_rejected() {
        let psi1 = WeightedHypergraph::new(2, 2);
        let psi2 = WeightedHypergraph::from_entries(2, 2, [(vec![0, 1], 2.0)]).unwrap();
        assert!(build_antidistinguishing_sequence(&psi1, &psi2, Setting::Qubit).is_err());
    }
}
