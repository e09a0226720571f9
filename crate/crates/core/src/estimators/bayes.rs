use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi, CMat, TOL};
use crate::mub::MubSet;
use crate::negativity::restart_rng;
use crate::tomography::ProbabilityTable;

use super::free::FreeSpace;
use super::max_mineig::{self, MineigConfig};
use super::{check, EstimatorKind, EstimatorResult, Frame};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BayesConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Independent chains, each with its own stream; averaged in chain order.
    pub shards: usize,
    pub thinning: usize,
    /// Burn-in steps per free dimension.
    pub burn_in_factor: usize,
    pub batches_per_shard: usize,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig { n_samples: 100_000, seed: 1, shards: 4, thinning: 5, burn_in_factor: 10, batches_per_shard: 25 }
    }
}

/// Chord of the PSD body through ρ along U: the interval of t with ρ + tU ⪰ 0, for positive definite ρ.
fn chord(rho: &CMat, u: &CMat) -> (f64, f64) {
    let e = jacobi(rho);
    let l = e.map(|x| 1.0 / x.max(1e-300).sqrt());
    let k = &(&l * u) * &l;
    let kv = jacobi(&k.hermitian_part()).values;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &kappa in &kv {
        if kappa > 0.0 {
            lo = lo.max(-1.0 / kappa);
        } else if kappa < 0.0 {
            hi = hi.min(-1.0 / kappa);
        }
    }
    (lo, hi)
}

struct Shard {
    sum_x: Vec<f64>,
    /// batch means of each tracked observable
    batches: Vec<Vec<f64>>,
    /// per-observable sums of value and square for the plain variance
    s1: Vec<f64>,
    s2: Vec<f64>,
    count: usize,
}

/// Hit-and-run chain of `n` thinned samples; observables are linear functionals of x.
fn run_shard(space: &FreeSpace, x0: &[f64], n: usize, obs: &[Vec<f64>], obs0: &[f64], cfg: &BayesConfig, shard: usize) -> Shard {
    let dim = space.dim();
    let mut rng = restart_rng(cfg.seed, shard as u64);
    let mut x = x0.to_vec();
    let step = |x: &mut Vec<f64>, rng: &mut rand_chacha::ChaCha8Rng| {
        let mut u: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v /= nu);
        let (lo, hi) = chord(&space.point(x), &space.direction(&u));
        let t = lo + (hi - lo) * rng.gen::<f64>();
        for (xi, ui) in x.iter_mut().zip(&u) {
            *xi += t * ui;
        }
    };
    for _ in 0..cfg.burn_in_factor * dim {
        step(&mut x, &mut rng);
    }
    let nobs = obs.len();
    let nb = cfg.batches_per_shard.max(1).min(n.max(1));
    let per_batch = (n / nb).max(1);
    let mut out = Shard { sum_x: vec![0.0; dim], batches: vec![Vec::new(); nobs], s1: vec![0.0; nobs], s2: vec![0.0; nobs], count: 0 };
    let mut acc = vec![0.0; nobs];
    let mut in_batch = 0;
    for _ in 0..n {
        for _ in 0..cfg.thinning.max(1) {
            step(&mut x, &mut rng);
        }
        for (s, xi) in out.sum_x.iter_mut().zip(&x) {
            *s += xi;
        }
        for j in 0..nobs {
            let v = obs0[j] + obs[j].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            acc[j] += v;
            out.s1[j] += v;
            out.s2[j] += v * v;
        }
        out.count += 1;
        in_batch += 1;
        if in_batch == per_batch {
            for j in 0..nobs {
                out.batches[j].push(acc[j] / per_batch as f64);
                acc[j] = 0.0;
            }
            in_batch = 0;
        }
    }
    out
}

/// Bayesian mean for a flat prior on the unmeasured coordinates: hit-and-run over the PSD body,
/// sharded into independent seeded chains.
pub fn bayes_mean_with(t: &ProbabilityTable, m: &MubSet, cfg: &BayesConfig) -> Result<EstimatorResult> {
    check(t, m)?;
    if cfg.n_samples == 0 || cfg.shards == 0 {
        return Err(Error::InvalidInput("n_samples and shards must be positive".into()));
    }
    let frame = Frame::new(m);
    let space = FreeSpace::new(&frame, t);
    let dim = space.dim();
    if dim == 0 {
        let mut r = EstimatorResult::build(EstimatorKind::BayesMean, &frame, t, space.point(&[]))?;
        r.seed = Some(cfg.seed);
        r.diagnostics.mixing_ok = Some(true);
        return Ok(r);
    }
    let start = max_mineig::solve(&space, &MineigConfig::default());
    let interior = jacobi(&start.rho).min() > TOL.psd;

    // tracked observables: every free coordinate, plus Re/Im of the qutrit z_α
    let mut obs: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut obs0 = vec![0.0; dim];
    let zbase = frame.z(&space.base);
    if let Some(zb) = zbase {
        let zdirs: Vec<[C64; 4]> = space.dirs.iter().map(|e| frame.z(e).expect("qutrit frame")).collect();
        for a in 0..4 {
            obs.push(zdirs.iter().map(|z| z[a].re).collect());
            obs0.push(zb[a].re);
            obs.push(zdirs.iter().map(|z| z[a].im).collect());
            obs0.push(zb[a].im);
        }
    }

    let per = cfg.n_samples.div_ceil(cfg.shards);
    let shards: Vec<Shard> = if interior {
        (0..cfg.shards)
            .into_par_iter()
            .map(|s| run_shard(&space, &start.x, per, &obs, &obs0, cfg, s))
            .collect()
    } else {
        Vec::new()
    };

    let total: usize = shards.iter().map(|s| s.count).sum();
    let mut mean_x = vec![0.0; dim];
    for s in &shards {
        for (m, v) in mean_x.iter_mut().zip(&s.sum_x) {
            *m += v;
        }
    }
    let rho = if total > 0 {
        mean_x.iter_mut().for_each(|v| *v /= total as f64);
        space.point(&mean_x)
    } else {
        start.rho.clone()
    };

    // batch-means standard errors and effective sample sizes
    let mut se = vec![0.0; obs.len()];
    let mut ess_min = f64::INFINITY;
    if total > 0 {
        for j in 0..obs.len() {
            let bm: Vec<f64> = shards.iter().flat_map(|s| s.batches[j].iter().copied()).collect();
            let nb = bm.len() as f64;
            let s1: f64 = shards.iter().map(|s| s.s1[j]).sum();
            let s2: f64 = shards.iter().map(|s| s.s2[j]).sum();
            let mean = s1 / total as f64;
            let var = (s2 / total as f64 - mean * mean).max(0.0);
            if nb < 2.0 {
                continue;
            }
            let bmean = bm.iter().sum::<f64>() / nb;
            let bvar = bm.iter().map(|v| (v - bmean).powi(2)).sum::<f64>() / (nb - 1.0);
            se[j] = (bvar / nb).sqrt();
            if var > 1e-300 && bvar > 1e-300 {
                let batch_len = total as f64 / nb;
                ess_min = ess_min.min(total as f64 * var / (batch_len * bvar));
            }
        }
    }
    let ess = if total > 0 { ess_min.min(total as f64) } else { 0.0 };

    let mut r = EstimatorResult::build(EstimatorKind::BayesMean, &frame, t, rho)?;
    r.iterations = total * cfg.thinning.max(1);
    r.seed = Some(cfg.seed);
    r.residual = se.iter().copied().fold(0.0, f64::max);
    r.diagnostics.effective_sample_size = Some(ess);
    r.diagnostics.n_samples = Some(total);
    r.diagnostics.mixing_ok = Some(interior && ess >= 100.0);
    r.converged = interior && ess >= 100.0;
    if zbase.is_some() {
        r.diagnostics.z_stderr = Some((0..4).map(|a| [se[dim + 2 * a], se[dim + 2 * a + 1]]).collect());
    }
    Ok(r)
}

pub fn bayes_mean_estimator(t: &ProbabilityTable, m: &MubSet, n_samples: usize, seed: u64) -> Result<EstimatorResult> {
    bayes_mean_with(t, m, &BayesConfig { n_samples, seed, ..Default::default() })
}
