use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{jacobi, TOL};
use crate::mub::MubSet;
use crate::tomography::ProbabilityTable;

use super::free::{dot, norm, FreeSpace};
use super::max_mineig::{self, MineigConfig};
use super::{check, EstimatorKind, EstimatorResult, Frame};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VnConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for VnConfig {
    fn default() -> Self {
        VnConfig { tol: 1e-10, max_iter: 100_000 }
    }
}

/// S(ρ(x)) and its free-coordinate gradient −Tr(ln ρ E_i); −∞ outside the open cone.
fn entropy_and_gradient(space: &FreeSpace, x: &[f64]) -> (f64, Vec<f64>) {
    let e = jacobi(&space.point(x));
    if e.values[0] <= 0.0 {
        return (f64::NEG_INFINITY, Vec::new());
    }
    let s = -e.values.iter().map(|&l| l * l.ln()).sum::<f64>();
    let g = space.project(&e.map(|l| -l.ln()));
    (s, g)
}

/// Gradient ascent of the von Neumann entropy over the free coordinates, started from the
/// max-min-eigenvalue point and kept strictly inside the cone by backtracking.
pub fn max_vn_with(t: &ProbabilityTable, m: &MubSet, cfg: &VnConfig) -> Result<EstimatorResult> {
    check(t, m)?;
    let frame = Frame::new(m);
    let space = FreeSpace::new(&frame, t);
    let start = max_mineig::solve(&space, &MineigConfig::default());
    let interior = jacobi(&start.rho).min() > TOL.psd;
    let mut x = start.x;
    let mut iterations = 0;
    let mut residual = 0.0;
    let mut converged = space.dim() == 0;
    if interior && space.dim() > 0 {
        let (mut f, mut g) = entropy_and_gradient(&space, &x);
        let mut step = 1.0;
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        for _ in 0..cfg.max_iter {
            residual = norm(&g);
            if residual < cfg.tol {
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
            for _ in 0..80 {
                let xn: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a + step * b).collect();
                let (fnew, gnew) = entropy_and_gradient(&space, &xn);
                if fnew.is_finite() && fnew >= f + 1e-4 * step * residual * residual {
                    prev = Some((std::mem::replace(&mut x, xn), std::mem::replace(&mut g, gnew)));
                    f = fnew;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            iterations += 1;
            if !accepted {
                converged = residual < 1e-6;
                break;
            }
        }
    }
    let mut r = EstimatorResult::build(EstimatorKind::MaxVn, &frame, t, space.point(&x))?;
    r.iterations = iterations;
    r.residual = residual;
    r.converged = converged && (interior || space.dim() == 0);
    Ok(r)
}

/// The constraint-consistent state with the largest von Neumann entropy.
pub fn max_vn_estimator(t: &ProbabilityTable, m: &MubSet) -> Result<EstimatorResult> {
    max_vn_with(t, m, &VnConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use crate::mub::build_mub;

    #[test]
    fn uniform_table_gives_maximally_mixed() {
        let m = build_mub(5).unwrap();
        let t = ProbabilityTable::new(5, vec![vec![0.2; 5]; 3]).unwrap();
        let r = max_vn_estimator(&t, &m).unwrap();
        assert!(r.converged);
        assert!((&r.estimator - &CMat::identity(5).scale(0.2)).max_abs() < 1e-10);
    }
}
