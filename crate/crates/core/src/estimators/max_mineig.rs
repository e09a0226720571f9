use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{jacobi, CMat, EigenDecomposition};
use crate::mub::MubSet;
use crate::tomography::ProbabilityTable;

use super::free::{dot, norm, FreeSpace};
use super::{check, EstimatorKind, EstimatorResult, Frame};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MineigConfig {
    /// Soft-min temperatures visited in order; the last one sets the final accuracy.
    pub temperatures: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MineigConfig {
    fn default() -> Self {
        MineigConfig { temperatures: (2..=10).map(|k| 10f64.powi(-k)).collect(), tol: 1e-10, max_iter: 20_000 }
    }
}

/// −τ ln Σ_i e^{−λ_i/τ} and its matrix gradient Σ_i w_i |v_i⟩⟨v_i| with softmin weights w.
fn softmin(e: &EigenDecomposition, tau: f64) -> (f64, CMat) {
    let lo = e.values[0];
    let ws: Vec<f64> = e.values.iter().map(|&l| (-(l - lo) / tau).exp()).collect();
    let z: f64 = ws.iter().sum();
    let value = lo - tau * z.ln();
    let n = e.values.len();
    let mut g = CMat::zeros(n);
    for (k, w) in ws.iter().enumerate() {
        if *w > 1e-18 {
            g.axpy(w / z, &CMat::outer(&e.vector(k)));
        }
    }
    (value, g)
}

const STALL_WINDOW: usize = 50;

pub(crate) struct MineigSolution {
    pub x: Vec<f64>,
    pub rho: CMat,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Ascent on the smallest eigenvalue over the free coordinates. Each temperature stage runs
/// Barzilai–Borwein steps along the softmin-weighted subgradient with Armijo backtracking.
pub(crate) fn solve(space: &FreeSpace, cfg: &MineigConfig) -> MineigSolution {
    let n = space.dim();
    let mut x = vec![0.0; n];
    if n == 0 {
        return MineigSolution { rho: space.point(&x), x, iterations: 0, residual: 0.0, converged: true };
    }
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let eval = |x: &[f64], tau: f64| {
        let e = jacobi(&space.point(x));
        let (v, g) = softmin(&e, tau);
        (v, space.project(&g))
    };
    for &tau in &cfg.temperatures {
        let (mut f, mut g) = eval(&x, tau);
        let mut step = 1.0;
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut trail = std::collections::VecDeque::with_capacity(STALL_WINDOW + 1);
        converged = false;
        for _ in 0..cfg.max_iter {
            residual = norm(&g);
            trail.push_back(f);
            if trail.len() > STALL_WINDOW {
                trail.pop_front();
            }
            // at small τ the gradient norm cannot reach tol in floating point; stop once the value stalls
            if residual < cfg.tol || (trail.len() == STALL_WINDOW && f - trail[0] <= cfg.tol * 1e-5) {
                converged = true;
                break;
            }
            if let Some((xp, gp)) = &prev {
                let s: Vec<f64> = x.iter().zip(xp).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gp.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 0.0 {
                    step = dot(&s, &s) / sy;
                }
            }
            let mut accepted = false;
            for _ in 0..60 {
                let xn: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
                let (fnew, gnew) = eval(&xn, tau);
                if fnew >= f + 1e-4 * step * residual * residual {
                    prev = Some((std::mem::replace(&mut x, xn), std::mem::replace(&mut g, gnew)));
                    f = fnew;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            iterations += 1;
            if !accepted {
                // no ascent left at this temperature within roundoff
                converged = true;
                break;
            }
        }
    }
    MineigSolution { rho: space.point(&x), x, iterations, residual, converged }
}

pub fn max_mineig_with(t: &ProbabilityTable, m: &MubSet, cfg: &MineigConfig) -> Result<EstimatorResult> {
    check(t, m)?;
    let frame = Frame::new(m);
    let space = FreeSpace::new(&frame, t);
    let sol = solve(&space, cfg);
    let mut r = EstimatorResult::build(EstimatorKind::MaxMineig, &frame, t, sol.rho)?;
    r.iterations = sol.iterations;
    r.residual = sol.residual;
    r.converged = sol.converged;
    r.diagnostics.is_physical = Some(r.min_eigenvalue >= -crate::linalg::TOL.psd);
    Ok(r)
}

/// The constraint-consistent operator with the largest smallest eigenvalue.
pub fn max_mineig_estimator(t: &ProbabilityTable, m: &MubSet) -> Result<EstimatorResult> {
    max_mineig_with(t, m, &MineigConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mub::build_mub;

    #[test]
    fn uniform_table_gives_maximally_mixed() {
        let m = build_mub(3).unwrap();
        let t = ProbabilityTable::new(3, vec![vec![1.0 / 3.0; 3]; 2]).unwrap();
        let r = max_mineig_estimator(&t, &m).unwrap();
        assert!((&r.estimator - &CMat::identity(3).scale(1.0 / 3.0)).max_abs() < 1e-12);
        assert!((r.min_eigenvalue - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_table_is_the_state() {
        let m = build_mub(3).unwrap();
        let rho = crate::fixtures::rho_w(0.3);
        let t = crate::tomography::born_probabilities(&rho, &m, 4).unwrap();
        let r = max_mineig_estimator(&t, &m).unwrap();
        assert!((&r.estimator - &rho).max_abs() < 1e-12);
    }
}
