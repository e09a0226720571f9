use crate::linalg::{hs, CMat};
use crate::tomography::ProbabilityTable;

use super::Frame;

/// Affine parameterization ρ(x) = ULIN + Σ_i x_i E_i of every unit-trace Hermitian operator that reproduces
/// the measured rows. Each E_i = Σ_l c_l Π_{βl} for an unmeasured β with c orthonormal and Σ_l c_l = 0,
/// so the E_i are orthonormal in the Hilbert–Schmidt metric and x is a flat coordinate system for w_{βl}.
pub struct FreeSpace {
    pub base: CMat,
    pub dirs: Vec<CMat>,
    /// (β, c) for each direction
    pub coeffs: Vec<(usize, Vec<f64>)>,
}

/// Orthonormal basis of {c ∈ R^d : Σ c = 0}.
pub fn helmert(d: usize) -> Vec<Vec<f64>> {
    (1..d)
        .map(|j| {
            let s = 1.0 / ((j * (j + 1)) as f64).sqrt();
            (0..d).map(|i| if i < j { s } else if i == j { -(j as f64) * s } else { 0.0 }).collect()
        })
        .collect()
}

impl FreeSpace {
    pub fn new(frame: &Frame, t: &ProbabilityTable) -> Self {
        let d = frame.d;
        let inv = 1.0 / d as f64;
        let mut base = CMat::identity(d).scale(inv);
        for (a, row) in t.probs.iter().enumerate() {
            for (k, &p) in row.iter().enumerate() {
                base.axpy(p - inv, &frame.projs[a][k]);
            }
        }
        let h = helmert(d);
        let mut dirs = Vec::new();
        let mut coeffs = Vec::new();
        for beta in t.m..=d {
            for c in &h {
                let mut e = CMat::zeros(d);
                for (l, &cl) in c.iter().enumerate() {
                    if cl != 0.0 {
                        e.axpy(cl, &frame.projs[beta][l]);
                    }
                }
                dirs.push(e);
                coeffs.push((beta, c.clone()));
            }
        }
        FreeSpace { base, dirs, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn point(&self, x: &[f64]) -> CMat {
        let mut r = self.base.clone();
        for (xi, e) in x.iter().zip(&self.dirs) {
            if *xi != 0.0 {
                r.axpy(*xi, e);
            }
        }
        r
    }

    pub fn direction(&self, u: &[f64]) -> CMat {
        let mut r = CMat::zeros(self.base.dim());
        for (ui, e) in u.iter().zip(&self.dirs) {
            r.axpy(*ui, e);
        }
        r
    }

    /// Components Tr(G E_i) of a matrix gradient G.
    pub fn project(&self, g: &CMat) -> Vec<f64> {
        self.dirs.iter().map(|e| hs(g, e)).collect()
    }

    /// Coordinates of a Hermitian operator that satisfies the measured constraints.
    pub fn coords_of(&self, rho: &CMat) -> Vec<f64> {
        let diff = rho - &self.base;
        self.project(&diff)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
