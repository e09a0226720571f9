//! Analytic states used by the regression tests and the reproduction harness.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::linalg::CMat;
use crate::mub::{q3, MubSet};

/// ½[[1,−1,0],[−1,1,0],[0,0,0]]
pub fn antisym_qutrit() -> CMat {
    let mut v = vec![C64::new(0.0, 0.0); 3];
    v[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    v[1] = C64::new(-FRAC_1_SQRT_2, 0.0);
    CMat::outer(&v)
}

/// ρ_w = (1 − w)·(antisym_qutrit) + w·I/3
pub fn rho_w(w: f64) -> CMat {
    let mut r = antisym_qutrit().scale(1.0 - w);
    r.add_identity(w / 3.0);
    r
}

/// λ₁Π_{1j} + λ₂Π_{2k} for the qutrit set (bases 0 and 1 here).
pub fn two_basis_mixture_jk(m: &MubSet, l1: f64, l2: f64, j: usize, k: usize) -> CMat {
    let mut r = m.projector(0, j).scale(l1);
    r.axpy(l2, &m.projector(1, k));
    r
}

pub fn two_basis_mixture(l1: f64, l2: f64) -> CMat {
    two_basis_mixture_jk(&crate::mub::build_mub(3).expect("d = 3 is supported"), l1, l2, 0, 0)
}

/// Projector on (|0⟩ − |1⟩)/√2 in the computational basis; its M = d ULIN estimator has eigenvalue 1/d − 1/2.
pub fn antisym_pair(d: usize) -> CMat {
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    v[1] = C64::new(-FRAC_1_SQRT_2, 0.0);
    CMat::outer(&v)
}

/// Projector on (|ψ_{10}⟩ + |ψ_{11}⟩)/√2 from the first basis.
pub fn first_basis_pair(m: &MubSet) -> CMat {
    let a = m.ket(0, 0);
    let b = m.ket(0, 1);
    let v: Vec<C64> = a.iter().zip(&b).map(|(x, y)| (x + y) * FRAC_1_SQRT_2).collect();
    CMat::outer(&v)
}

/// Measured z-coordinates (z₁, z₂, z₃) of the two comparison states.
///
/// For the first state the quoted z₃ = 0.314 + 0.165i admits no positive completion; its conjugate does.
/// `STATE1_Z_QUOTED` keeps the quoted value.
pub const STATE1_Z: [(f64, f64); 3] = [(0.160, -0.321), (0.571, -0.192), (0.314, -0.165)];
pub const STATE1_Z_QUOTED: [(f64, f64); 3] = [(0.160, -0.321), (0.571, -0.192), (0.314, 0.165)];
pub const STATE2_Z: [(f64, f64); 3] = [(-0.345, 0.0574), (0.303, 0.328), (0.00057, -0.294)];

pub fn zs(z: &[(f64, f64)]) -> Vec<C64> {
    z.iter().map(|&(re, im)| C64::new(re, im)).collect()
}

/// z-coordinates of ρ_w: z₁ = z₂ = z₃ = −(1 − w)/2, z₄ = −(1 − w)q²/2.
pub fn rho_w_z(w: f64) -> [C64; 4] {
    let h = C64::new(-(1.0 - w) / 2.0, 0.0);
    [h, h, h, h * q3() * q3()]
}
