//! Peak latent memory of the hypergraph engine across a sweep of `n`.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::hsmt::{build_sequence, min_len, HsmtInstance, TailSpec};
use crate::hypergraph::HypergraphEngine;
use crate::types::{binomial, Setting};

#[derive(Clone, Debug, Serialize)]
pub struct MemoryRow {
    pub n: usize,
    pub k: usize,
    pub peak_entries: usize,
    /// `Σ_{j≤k} C(n, j)`
    pub bound: usize,
    pub within_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MemoryReport {
    pub rows: Vec<MemoryRow>,
    /// Least-squares slope of `log peak` against `log n`.
    pub slope: f64,
}

/// Every site prepared in the `X` basis, every `k`-subset gated with a
/// nonzero angle, then one diagonal tail measurement.
pub fn bench_instance(n: usize, k: usize, seed: u64) -> Result<HsmtInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = (0..binomial(n, k)).map(|_| rng.gen_range(0.1..0.9) * PI).collect();
    let mut theta = std::collections::BTreeMap::new();
    theta.insert((n - k..n).collect(), rng.gen_range(0.1..0.9) * PI);
    let inst = HsmtInstance {
        n,
        k,
        ell: min_len(n, k) + 1,
        upsilon: vec![FRAC_PI_4; n],
        gamma,
        b: (0..n - k).collect(),
        tail: vec![TailSpec { phi: vec![0.3; k], theta }],
        setting: Setting::Qubit,
    };
    inst.validate()?;
    Ok(inst)
}

pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn bench_memory(k: usize, ns: &[usize], seed: u64) -> Result<MemoryReport> {
    if ns.len() < 2 {
        return Err(Error::InvalidArgument("the sweep needs at least two sizes".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let inst = bench_instance(n, k, seed)?;
        let tokens = build_sequence(&inst)?;
        let eng = HypergraphEngine::new(&EngineConfig::new(n, k))?;
        let (_, peak) = eng.sample_instrumented(&tokens, seed, 0)?;
        let bound = (1..=k).map(|j| binomial(n, j)).sum();
        rows.push(MemoryRow { n, k, peak_entries: peak, bound, within_bound: peak <= bound });
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.peak_entries as f64)).collect();
    Ok(MemoryReport { slope: log_log_slope(&pts), rows })
}
