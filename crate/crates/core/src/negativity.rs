use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi, min_eig_vector, CMat};
use crate::mub::MubSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativityConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Stop when the objective moved less than this over `stall_window` iterations.
    pub stall_tol: f64,
    pub stall_window: usize,
}

impl Default for NegativityConfig {
    fn default() -> Self {
        NegativityConfig { tol: 1e-10, max_iter: 10_000, stall_tol: 1e-14, stall_window: 5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaMinResult {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub lambda_min: f64,
    #[serde(skip)]
    pub optimizer_rho: Option<CMat>,
    #[serde(skip)]
    pub optimizer_sigma: Option<CMat>,
    pub restarts_used: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub bound_saturated: bool,
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Precomputed kets of the first M bases.
struct Ulin<'a> {
    m: &'a MubSet,
    kets: Vec<Vec<C64>>,
}

impl<'a> Ulin<'a> {
    fn new(m: &'a MubSet, mm: usize) -> Self {
        let kets = (0..mm).flat_map(|a| (0..m.dim).map(move |k| (a, k))).map(|(a, k)| m.ket(a, k)).collect();
        Ulin { m, kets }
    }

    /// ULIN estimator of the pure state |v⟩⟨v|.
    fn of_pure(&self, v: &[C64]) -> CMat {
        let d = self.m.dim;
        let inv = 1.0 / d as f64;
        let mut out = CMat::identity(d).scale(inv);
        for ket in &self.kets {
            let amp: C64 = ket.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
            let w = amp.norm_sqr() - inv;
            for i in 0..d {
                let ki = ket[i] * w;
                for j in 0..d {
                    out[(i, j)] += ki * ket[j].conj();
                }
            }
        }
        out
    }
}

fn defect(a: &CMat, v: &[C64]) -> (f64, f64) {
    let av = a.mul_vec(v);
    let lam: f64 = v.iter().zip(&av).map(|(x, y)| (x.conj() * y).re).sum();
    // ‖Aσ − λσ‖_F for σ = |v⟩⟨v| equals ‖(A − λ)v‖ since ‖v‖ = 1
    let r = av.iter().zip(v).map(|(y, x)| (y - x * lam).norm_sqr()).sum::<f64>().sqrt();
    (lam, r)
}

/// Alternate σ ← min-eigenprojector of ULIN[ρ] and ρ ← min-eigenprojector of ULIN[σ] until the pair equations hold.
pub fn lambda_min_iterate(m: &MubSet, mm: usize, rho0: &CMat, cfg: &NegativityConfig) -> Result<LambdaMinResult> {
    if mm == 0 || mm > m.dim + 1 {
        return Err(Error::InvalidInput(format!("M = {} outside 1..={}", mm, m.dim + 1)));
    }
    if rho0.dim() != m.dim {
        return Err(Error::DimensionMismatch(format!("start state {} vs d = {}", rho0.dim(), m.dim)));
    }
    let ulin = Ulin::new(m, mm);
    let d = m.dim;
    // a pure start: the dominant eigenvector of ρ₀
    let e0 = jacobi(rho0);
    let mut rho_v = e0.vector(d - 1);
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut lam = f64::INFINITY;
    for it in 0..cfg.max_iter {
        iterations = it + 1;
        let a = ulin.of_pure(&rho_v);
        let sigma_v = min_eig_vector(&jacobi(&a));
        let b = ulin.of_pure(&sigma_v);
        rho_v = min_eig_vector(&jacobi(&b));
        let a2 = ulin.of_pure(&rho_v);
        let (l1, r1) = defect(&a2, &sigma_v);
        let (_, r2) = defect(&b, &rho_v);
        lam = l1;
        history.push(lam);
        residual = r1.max(r2);
        if residual < cfg.tol {
            converged = true;
            break;
        }
        let n = history.len();
        if n > cfg.stall_window && (history[n - 1 - cfg.stall_window] - history[n - 1]).abs() < cfg.stall_tol {
            converged = true;
            break;
        }
    }
    let a = ulin.of_pure(&rho_v);
    let sigma_v = min_eig_vector(&jacobi(&a));
    let final_lam = a.expectation(&sigma_v).min(lam);
    let bound = -((mm as f64) - 1.0) / d as f64;
    Ok(LambdaMinResult {
        d,
        m: mm,
        lambda_min: final_lam,
        optimizer_rho: Some(CMat::outer(&rho_v)),
        optimizer_sigma: Some(CMat::outer(&sigma_v)),
        restarts_used: 1,
        iterations,
        residual,
        converged,
        bound_saturated: (final_lam - bound).abs() < 1e-6,
        history,
    })
}

/// Haar-random pure state from a seeded stream.
pub fn random_pure_state(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let mut v: Vec<C64> = (0..d)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    crate::linalg::normalize(&mut v);
    CMat::outer(&v)
}

/// Independent generator for restart `index` of a run seeded with `seed`.
pub fn restart_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Most negative result over `restarts` random pure starts; the merge is independent of execution order.
pub fn lambda_min_scan(m: &MubSet, mm: usize, restarts: usize, seed: u64, cfg: &NegativityConfig) -> Result<LambdaMinResult> {
    if restarts == 0 {
        return Err(Error::InvalidInput("restarts must be at least 1".into()));
    }
    let runs: Vec<Result<LambdaMinResult>> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(seed, i as u64);
            lambda_min_iterate(m, mm, &random_pure_state(m.dim, &mut rng), cfg)
        })
        .collect();
    let mut best: Option<LambdaMinResult> = None;
    for r in runs {
        let r = r?;
        if best.as_ref().map_or(true, |b| r.lambda_min < b.lambda_min) {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one restart");
    best.restarts_used = restarts;
    Ok(best)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConjectureRow {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub lambda_min: f64,
    /// −(M−1)/d
    pub lower_bound: f64,
    /// −min{(M−1)/d, 1/2 − 1/d}
    pub conjectured_bound: f64,
    pub respects_lower_bound: bool,
    pub respects_conjecture: bool,
}

/// Compare scanned values against the proven bound and the sharper conjectured one. Reports only.
pub fn check_conjecture(results: &[LambdaMinResult]) -> Vec<ConjectureRow> {
    results
        .iter()
        .map(|r| {
            let d = r.d as f64;
            let lower = -((r.m as f64) - 1.0) / d;
            let conj = -(((r.m as f64) - 1.0) / d).min(0.5 - 1.0 / d);
            ConjectureRow {
                d: r.d,
                m: r.m,
                lambda_min: r.lambda_min,
                lower_bound: lower,
                conjectured_bound: conj,
                respects_lower_bound: r.lambda_min >= lower - 1e-9,
                respects_conjecture: r.lambda_min >= conj - 1e-9,
            }
        })
        .collect()
}

/// Marker classes for the λ_min plot: the M = d closed form, bound saturated, or strictly above the bound.
pub fn marker(r: &LambdaMinResult) -> &'static str {
    let d = r.d as f64;
    if r.m == r.d && (r.lambda_min - (1.0 / d - 0.5)).abs() < 1e-6 {
        "M=d-analytic"
    } else if r.bound_saturated {
        "saturated"
    } else {
        "strict"
    }
}
