//! Dense amplitude simulation and exact phase estimation.
//!
//! A [`DenseState`] holds amplitudes over `local_dim^sites` basis states in
//! mixed radix: the digit of site `j` in basis index `x` is
//! `(x / local_dim^j) % local_dim`. Qubits use `local_dim = 2`; residue
//! lattices for qumodes use `local_dim = 2d`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::phase::{circular_distance, circular_mean, wrap_phase, CLUSTER_TOL, PROB_FLOOR};
use crate::rng::pick;
use crate::types::Hyperedge;

/// Dense engines refuse registers larger than this many qubits.
pub const MAX_DENSE_QUBITS: usize = 22;

/// Which computational-basis string a multi-controlled phase acts on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ProjectorConvention {
    /// Phase on `|1…1⟩`, the hypergraph-state convention.
    #[default]
    Ones,
    /// Phase on `|0…0⟩`.
    Zeros,
}

impl FromStr for ProjectorConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ones" => Ok(ProjectorConvention::Ones),
            "zeros" => Ok(ProjectorConvention::Zeros),
            other => Err(Error::InvalidArgument(format!(
                "unknown projector convention {other:?} (expected ones|zeros)"
            ))),
        }
    }
}

impl fmt::Display for ProjectorConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectorConvention::Ones => "ones",
            ProjectorConvention::Zeros => "zeros",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    sites: usize,
    local_dim: usize,
    amps: Vec<C64>,
}

impl DenseState {
    /// All sites in basis state 0.
    pub fn zero(sites: usize, local_dim: usize) -> Result<Self> {
        let len = checked_len(sites, local_dim)?;
        let mut amps = vec![C64::new(0.0, 0.0); len];
        amps[0] = C64::new(1.0, 0.0);
        Ok(DenseState { sites, local_dim, amps })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        if n > MAX_DENSE_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "{n} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}"
            )));
        }
        Self::zero(n, 2)
    }

    /// Wraps an amplitude vector, normalizing it.
    pub fn from_amplitudes(sites: usize, local_dim: usize, amps: Vec<C64>) -> Result<Self> {
        let len = checked_len(sites, local_dim)?;
        if amps.len() != len {
            return Err(Error::Dimension(format!(
                "expected {len} amplitudes, got {}",
                amps.len()
            )));
        }
        let mut s = DenseState { sites, local_dim, amps };
        let norm = s.norm();
        if norm < 1e-300 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        s.scale(1.0 / norm);
        Ok(s)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale(&mut self, s: f64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    fn stride(&self, site: usize) -> usize {
        self.local_dim.pow(site as u32)
    }

    /// Digit of `site` in basis index `x`.
    pub fn digit(&self, x: usize, site: usize) -> usize {
        (x / self.stride(site)) % self.local_dim
    }

    fn check_sites(&self, sites: &[usize]) -> Result<()> {
        for (i, &s) in sites.iter().enumerate() {
            if s >= self.sites {
                return Err(Error::OutOfRange { index: s, n: self.sites });
            }
            if sites[..i].contains(&s) {
                return Err(Error::Structure(format!("repeated site {s}")));
            }
        }
        Ok(())
    }

    /// Multiplies every amplitude by `f(x)`.
    pub fn apply_diagonal<F: Fn(usize) -> C64>(&mut self, f: F) {
        for (x, a) in self.amps.iter_mut().enumerate() {
            *a *= f(x);
        }
    }

    /// Applies `op` (dimension `local_dim^|sites|`) to the listed sites. Local
    /// index digit `j` belongs to `sites[j]`.
    pub fn apply_local_operator(&mut self, sites: &[usize], op: &DMatrix<C64>) -> Result<()> {
        self.check_sites(sites)?;
        let dim = self.local_dim.pow(sites.len() as u32);
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, expected {dim}x{dim}",
                op.nrows(),
                op.ncols()
            )));
        }
        let offsets: Vec<usize> = (0..dim)
            .map(|l| {
                let mut off = 0;
                let mut rest = l;
                for &s in sites {
                    off += (rest % self.local_dim) * self.stride(s);
                    rest /= self.local_dim;
                }
                off
            })
            .collect();
        let mut local = vec![C64::new(0.0, 0.0); dim];
        for base in 0..self.amps.len() {
            if sites.iter().any(|&s| self.digit(base, s) != 0) {
                continue;
            }
            for (l, off) in offsets.iter().enumerate() {
                local[l] = self.amps[base + off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (c, v) in local.iter().enumerate() {
                    acc += op[(r, c)] * v;
                }
                self.amps[base + off] = acc;
            }
        }
        Ok(())
    }

    /// `exp(-iγ Π)` where `Π` projects the edge onto all ones (or all zeros).
    pub fn apply_ckz(&mut self, edge: &Hyperedge, gamma: f64, conv: ProjectorConvention) -> Result<()> {
        if self.local_dim != 2 {
            return Err(Error::InvalidArgument("apply_ckz needs qubit sites".into()));
        }
        edge.check_range(self.sites)?;
        let mask: usize = edge.vertices().iter().map(|v| 1usize << v).sum();
        let want = match conv {
            ProjectorConvention::Ones => mask,
            ProjectorConvention::Zeros => 0,
        };
        let ph = C64::from_polar(1.0, -gamma);
        for (x, a) in self.amps.iter_mut().enumerate() {
            if x & mask == want {
                *a *= ph;
            }
        }
        Ok(())
    }
}

fn checked_len(sites: usize, local_dim: usize) -> Result<usize> {
    if local_dim < 2 {
        return Err(Error::InvalidArgument("local dimension must be at least 2".into()));
    }
    (local_dim as u128)
        .checked_pow(sites as u32)
        .filter(|&l| l <= 1 << 26)
        .map(|l| l as usize)
        .ok_or_else(|| Error::InvalidArgument(format!("{local_dim}^{sites} amplitudes is too large")))
}

/// `exp(-i Σ φ_j X_j) · exp(-i Σ_w θ_w |1⟩⟨1|_w)` on the qubits of `beta`.
///
/// `theta` keys are vertex subsets of `beta` (the empty key is a global
/// phase); local bit `j` belongs to the `j`-th vertex of `beta`.
pub fn build_g_unitary(
    beta: &Hyperedge,
    phi: &[f64],
    theta: &BTreeMap<Vec<usize>, f64>,
) -> Result<DMatrix<C64>> {
    let m = beta.len();
    if phi.len() != m {
        return Err(Error::Dimension(format!(
            "phi has length {} but beta {beta} has {m}",
            phi.len()
        )));
    }
    let masks = theta_masks(beta, theta)?;
    let dim = 1usize << m;
    let (c, s): (Vec<f64>, Vec<f64>) = phi.iter().map(|p| (p.cos(), p.sin())).unzip();
    let diag: Vec<C64> = (0..dim)
        .map(|x| {
            let angle: f64 = masks.iter().filter(|(mk, _)| x & mk == *mk).map(|(_, t)| t).sum();
            C64::from_polar(1.0, -angle)
        })
        .collect();
    Ok(DMatrix::from_fn(dim, dim, |r, col| {
        let mut x = C64::new(1.0, 0.0);
        for j in 0..m {
            x *= if (r >> j) & 1 == (col >> j) & 1 {
                C64::new(c[j], 0.0)
            } else {
                C64::new(0.0, -s[j])
            };
        }
        x * diag[col]
    }))
}

/// Local bit masks for each `theta` key.
fn theta_masks(beta: &Hyperedge, theta: &BTreeMap<Vec<usize>, f64>) -> Result<Vec<(usize, f64)>> {
    theta
        .iter()
        .map(|(w, &t)| {
            let mut mask = 0;
            for v in w {
                let pos = beta.position(*v).ok_or_else(|| {
                    Error::Structure(format!("theta key {w:?} is not a subset of beta {beta}"))
                })?;
                mask |= 1 << pos;
            }
            Ok((mask, t))
        })
        .collect()
}

/// One eigenphase cluster of a unitary.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub phase: f64,
    pub projector: DMatrix<C64>,
}

/// Spectral projectors of a unitary, sorted by phase ascending.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub clusters: Vec<Cluster>,
}

impl Spectrum {
    pub fn of(u: &DMatrix<C64>) -> Result<Self> {
        let dim = u.nrows();
        if dim != u.ncols() || dim == 0 {
            return Err(Error::Dimension("spectrum needs a non-empty square matrix".into()));
        }
        // Unitaries are normal, so the complex Schur form is diagonal and its
        // unitary factor holds an orthonormal eigenbasis even when degenerate.
        let schur = Schur::try_new(u.clone(), 1e-14, 0)
            .ok_or_else(|| Error::InvalidArgument("Schur decomposition failed".into()))?;
        let (q, t) = schur.unpack();
        let mut eig: Vec<(f64, usize)> =
            (0..dim).map(|i| (wrap_phase(t[(i, i)].arg()), i)).collect();
        eig.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut groups: Vec<Vec<(f64, usize)>> = Vec::new();
        for e in eig {
            match groups.last_mut() {
                Some(g) if circular_distance(g.last().unwrap().0, e.0) < CLUSTER_TOL => g.push(e),
                _ => groups.push(vec![e]),
            }
        }
        // the first and last groups can meet across the branch cut
        if groups.len() > 1 {
            let first = groups[0][0].0;
            let last = groups.last().unwrap().last().unwrap().0;
            if circular_distance(first, last) < CLUSTER_TOL {
                let head = groups.remove(0);
                groups.last_mut().unwrap().extend(head);
            }
        }

        let mut clusters: Vec<Cluster> = groups
            .into_iter()
            .map(|g| {
                let phases: Vec<f64> = g.iter().map(|e| e.0).collect();
                let mut proj = DMatrix::<C64>::zeros(dim, dim);
                for &(_, i) in &g {
                    let col = q.column(i);
                    proj += col * col.adjoint();
                }
                Cluster { phase: circular_mean(&phases), projector: proj }
            })
            .collect();
        clusters.sort_by(|a, b| a.phase.total_cmp(&b.phase));
        Ok(Spectrum { clusters })
    }

    /// Largest entry of `Σ P - I`.
    pub fn resolution_error(&self) -> f64 {
        let dim = self.clusters[0].projector.nrows();
        let mut sum = DMatrix::<C64>::identity(dim, dim).map(|x| -x);
        for c in &self.clusters {
            sum += &c.projector;
        }
        sum.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// Probability and normalized post-measurement state of every cluster with
/// non-negligible weight, in phase order.
pub fn measurement_branches(
    state: &DenseState,
    sites: &[usize],
    spectrum: &Spectrum,
) -> Result<Vec<(f64, f64, DenseState)>> {
    let mut out = Vec::with_capacity(spectrum.clusters.len());
    for c in &spectrum.clusters {
        let mut post = state.clone();
        post.apply_local_operator(sites, &c.projector)?;
        let norm = post.norm();
        let p = norm * norm;
        if p < PROB_FLOOR {
            continue;
        }
        post.scale(1.0 / norm);
        out.push((c.phase, p, post));
    }
    Ok(out)
}

/// Outcome of an exact phase-estimation measurement.
#[derive(Clone, Debug)]
pub struct PhaseEstimationOutcome {
    pub phase: f64,
    pub probability: f64,
    pub post_state: DenseState,
}

/// Measures `G_beta(phi, theta)` on a qubit register, sampling with `u ∈ [0,1)`.
pub fn measure_g(
    state: &DenseState,
    beta: &Hyperedge,
    phi: &[f64],
    theta: &BTreeMap<Vec<usize>, f64>,
    u: f64,
) -> Result<PhaseEstimationOutcome> {
    beta.check_range(state.sites())?;
    let spec = Spectrum::of(&build_g_unitary(beta, phi, theta)?)?;
    let mut branches = measurement_branches(state, beta.vertices(), &spec)?;
    let probs: Vec<f64> = branches.iter().map(|b| b.1).collect();
    let (phase, probability, post_state) = branches.swap_remove(pick(&probs, u));
    Ok(PhaseEstimationOutcome { phase, probability, post_state })
}

/// Dense matrix of a diagonal operator given by its entries.
pub fn diagonal(entries: &[C64]) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(entries))
}
