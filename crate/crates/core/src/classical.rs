//! Classical Hamiltonian limit of the unit cell.
//!
//! A token acts on canonical pairs `(q, p)` in two unit-time flows. The gate
//! Hamiltonian `γ ∏_{j∈α} q_j` kicks the momenta. The measurement Hamiltonian
//! `p₀ (Σ_i φ_i p_i + Σ_w θ_w ∏_{j∈w} q_j)` couples to an ancilla pair
//! `(q₀, p₀ = 1)` started at `q₀ = 0`, and the output is the final `q₀`.
//! Both flows are polynomial in time and are integrated exactly.

use crate::error::{Error, Result};
use crate::types::Token;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalLatent {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl ClassicalLatent {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::Dimension(format!("q has length {} and p {}", q.len(), p.len())));
        }
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite latent coordinate".into()));
        }
        Ok(ClassicalLatent { q, p })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }
}

/// Polynomial in `t` by ascending coefficients.
#[derive(Clone, Debug, Default)]
struct Poly(Vec<f64>);

impl Poly {
    fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    fn linear(c0: f64, c1: f64) -> Self {
        Poly(vec![c0, c1])
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    fn add_scaled(&mut self, o: &Poly, s: f64) {
        if self.0.len() < o.0.len() {
            self.0.resize(o.0.len(), 0.0);
        }
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a += s * b;
        }
    }

    /// `∫_0^t`
    fn integral(&self) -> Poly {
        let mut out = vec![0.0];
        out.extend(self.0.iter().enumerate().map(|(i, c)| c / (i + 1) as f64));
        Poly(out)
    }

    fn at(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

fn check_token(latent: &ClassicalLatent, token: &Token) -> Result<()> {
    let n = latent.n();
    token.validate(n, n.max(1))
}

/// One token: gate kick, then the measurement flow. Returns the new latent
/// and the output `y = q₀`.
pub fn classical_unit_cell(latent: &ClassicalLatent, token: &Token) -> Result<(ClassicalLatent, f64)> {
    check_token(latent, token)?;
    let mut p = latent.p.clone();
    let q0 = &latent.q;
    if let Some(alpha) = &token.alpha {
        for &a in alpha.vertices() {
            let prod: f64 = alpha.vertices().iter().filter(|&&j| j != a).map(|&j| q0[j]).product();
            p[a] -= token.gamma * prod;
        }
    }
    let Some(beta) = &token.beta else {
        return Ok((ClassicalLatent { q: q0.clone(), p }, 0.0));
    };
    let mut phi = vec![0.0; latent.n()];
    for (&v, &f) in beta.vertices().iter().zip(&token.phi) {
        phi[v] = f;
    }
    let q_t: Vec<Poly> = (0..latent.n()).map(|j| Poly::linear(q0[j], phi[j])).collect();
    let prod_t = |w: &[usize], skip: Option<usize>| -> Poly {
        w.iter()
            .filter(|&&j| Some(j) != skip)
            .fold(Poly::constant(1.0), |acc, &j| acc.mul(&q_t[j]))
    };
    let mut p_t: Vec<Poly> = p.iter().map(|&x| Poly::constant(x)).collect();
    for (w, &th) in &token.theta {
        for &a in w {
            p_t[a].add_scaled(&prod_t(w, Some(a)).integral(), -th);
        }
    }
    let mut h = Poly::constant(0.0);
    for (j, &f) in phi.iter().enumerate() {
        if f != 0.0 {
            h.add_scaled(&p_t[j], f);
        }
    }
    for (w, &th) in &token.theta {
        h.add_scaled(&prod_t(w, None), th);
    }
    let y = h.integral().at(1.0);
    let q = q_t.iter().map(|x| x.at(1.0)).collect();
    let p = p_t.iter().map(|x| x.at(1.0)).collect();
    Ok((ClassicalLatent { q, p }, y))
}

/// Kick-drift-kick integration of the same two flows with step `h`, with the
/// output accumulated by the trapezoid rule. Used as an independent check.
pub fn leapfrog_unit_cell(latent: &ClassicalLatent, token: &Token, h: f64) -> Result<(ClassicalLatent, f64)> {
    check_token(latent, token)?;
    let n = latent.n();
    let steps = (1.0 / h).round() as usize;
    let h = 1.0 / steps as f64;
    let mut q = latent.q.clone();
    let mut p = latent.p.clone();
    let prod = |q: &[f64], w: &[usize], skip: Option<usize>| -> f64 {
        w.iter().filter(|&&j| Some(j) != skip).map(|&j| q[j]).product()
    };
    if let Some(alpha) = &token.alpha {
        let a: &[usize] = alpha.vertices();
        let force = |q: &[f64], p: &mut [f64], dt: f64| {
            for &i in a {
                p[i] -= dt * token.gamma * prod(q, a, Some(i));
            }
        };
        for _ in 0..steps {
            force(&q, &mut p, h / 2.0);
            force(&q, &mut p, h / 2.0);
        }
    }
    let Some(beta) = &token.beta else {
        return Ok((ClassicalLatent { q, p }, 0.0));
    };
    let mut phi = vec![0.0; n];
    for (&v, &f) in beta.vertices().iter().zip(&token.phi) {
        phi[v] = f;
    }
    let kick = |q: &[f64], p: &mut [f64], dt: f64| {
        for (w, &th) in &token.theta {
            for &a in w {
                p[a] -= dt * th * prod(q, w, Some(a));
            }
        }
    };
    let energy = |q: &[f64], p: &[f64]| -> f64 {
        phi.iter().zip(p).map(|(f, x)| f * x).sum::<f64>()
            + token.theta.iter().map(|(w, th)| th * prod(q, w, None)).sum::<f64>()
    };
    let mut y = 0.0;
    let mut e_prev = energy(&q, &p);
    for _ in 0..steps {
        kick(&q, &mut p, h / 2.0);
        for j in 0..n {
            q[j] += h * phi[j];
        }
        kick(&q, &mut p, h / 2.0);
        let e = energy(&q, &p);
        y += h * (e_prev + e) / 2.0;
        e_prev = e;
    }
    Ok((ClassicalLatent { q, p }, y))
}
