use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{prime_power, FiniteField, GaloisRing4};
use crate::linalg::CMat;

pub const MAX_DIM: usize = 64;

/// Complete set of d+1 mutually unbiased bases. Column k of `bases[a]` is |ψ_{ak}⟩ (0-based indices).
#[derive(Clone, Debug)]
pub struct MubSet {
    pub dim: usize,
    pub bases: Vec<CMat>,
    pub convention: String,
}

impl MubSet {
    pub fn new(dim: usize, bases: Vec<CMat>, convention: impl Into<String>) -> Result<Self> {
        if bases.len() != dim + 1 || bases.iter().any(|b| b.dim() != dim) {
            return Err(Error::DimensionMismatch(format!("expected {} bases of dimension {}", dim + 1, dim)));
        }
        Ok(MubSet { dim, bases, convention: convention.into() })
    }

    pub fn num_bases(&self) -> usize {
        self.bases.len()
    }

    pub fn ket(&self, alpha: usize, k: usize) -> Vec<C64> {
        self.bases[alpha].column(k)
    }

    /// Π_{αk} = |ψ_{αk}⟩⟨ψ_{αk}|
    pub fn projector(&self, alpha: usize, k: usize) -> CMat {
        CMat::outer(&self.ket(alpha, k))
    }

    /// All projectors of the first `m` bases.
    pub fn projectors(&self, m: usize) -> Vec<Vec<CMat>> {
        (0..m).map(|a| (0..self.dim).map(|k| self.projector(a, k)).collect()).collect()
    }

    /// ⟨ψ_{αk}|ρ|ψ_{αk}⟩
    pub fn prob(&self, rho: &CMat, alpha: usize, k: usize) -> f64 {
        rho.expectation(&self.ket(alpha, k))
    }

    /// Index of the computational basis.
    pub fn computational_index(&self) -> Option<usize> {
        let id = CMat::identity(self.dim);
        self.bases.iter().position(|b| (b - &id).max_abs() < 1e-14)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// q = e^{2πi/3}
pub fn q3() -> C64 {
    C64::from_polar(1.0, 2.0 * PI / 3.0)
}

fn qpow(e: i64) -> C64 {
    match e.rem_euclid(3) {
        0 => c(1.0, 0.0),
        1 => q3(),
        _ => q3().conj(),
    }
}

/// Build a complete MUB set for a prime-power dimension 2 ≤ d ≤ 64.
pub fn build_mub(d: usize) -> Result<MubSet> {
    let (p, n) = prime_power(d)?;
    if d > MAX_DIM {
        return Err(Error::UnsupportedDimension(format!("{} exceeds the supported maximum {}", d, MAX_DIM)));
    }
    match (p, n) {
        (2, 1) => Ok(pauli()),
        (3, 1) => Ok(qutrit()),
        (2, _) => Ok(galois_ring(n)),
        _ => Ok(odd_field(p, n)),
    }
}

/// Eigenbases of σ_x, σ_y, σ_z in that order.
fn pauli() -> MubSet {
    let s = FRAC_1_SQRT_2;
    let x = CMat::from_rows(&[vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]]).unwrap();
    let y = CMat::from_rows(&[vec![c(s, 0.0), c(s, 0.0)], vec![c(0.0, s), c(0.0, -s)]]).unwrap();
    MubSet::new(2, vec![x, y, CMat::identity(2)], "pauli: sigma_x, sigma_y, sigma_z eigenbases").unwrap()
}

/// The qutrit set with q = e^{2πi/3}; the fourth basis is computational.
fn qutrit() -> MubSet {
    let s = 1.0 / 3f64.sqrt();
    let rows = |r: [[i64; 3]; 3]| {
        CMat::from_rows(&r.iter().map(|row| row.iter().map(|&e| qpow(e) * s).collect()).collect::<Vec<_>>()).unwrap()
    };
    let b1 = rows([[0, 0, 0], [0, 2, 1], [0, 1, 2]]);
    let b2 = rows([[0, 0, 0], [0, 2, 1], [1, 2, 0]]);
    let b3 = rows([[0, 0, 0], [0, 2, 1], [2, 0, 1]]);
    MubSet::new(3, vec![b1, b2, b3, CMat::identity(3)], "qutrit: fixed table, computational basis last").unwrap()
}

/// ⟨j|ψ_{αk}⟩ = ω^{tr(αj² + kj)}/√d over GF(p^n), ω = e^{2πi/p}; computational basis last.
fn odd_field(p: usize, n: usize) -> MubSet {
    let f = FiniteField::new(p, n);
    let q = f.order();
    let norm = 1.0 / (q as f64).sqrt();
    let omega = |t: usize| C64::from_polar(norm, 2.0 * PI * t as f64 / p as f64);
    let mut bases = Vec::with_capacity(q + 1);
    for alpha in 0..q {
        bases.push(CMat::from_fn(q, |j, k| {
            let jj = f.mul(j, j);
            let arg = f.add(f.mul(alpha, jj), f.mul(k, j));
            omega(f.trace(arg))
        }));
    }
    bases.push(CMat::identity(q));
    let conv = format!(
        "gf({}^{}) quadratic phases, primitive polynomial {:?} (c_0..c_n), computational basis last",
        p, n, f.poly
    );
    MubSet::new(q, bases, conv).unwrap()
}

/// v_{a,b}(x) = 2^{-n/2} i^{tr((a + 2b)x)} over the Teichmüller set of GR(4, n); computational basis last.
fn galois_ring(n: usize) -> MubSet {
    let r = GaloisRing4::new(n);
    let q = 1usize << n;
    let norm = 1.0 / (q as f64).sqrt();
    let ipow = [c(norm, 0.0), c(0.0, norm), c(-norm, 0.0), c(0.0, -norm)];
    let t = &r.teichmuller;
    let mut bases = Vec::with_capacity(q + 1);
    for a in t {
        bases.push(CMat::from_fn(q, |j, k| {
            let s = r.add(a, &r.scale(&t[k], 2));
            ipow[r.trace(&r.mul(&s, &t[j])) as usize]
        }));
    }
    bases.push(CMat::identity(q));
    let conv = format!("galois ring GR(4,{}) with h = {:?} (c_0..c_n), computational basis last", n, r.h);
    MubSet::new(q, bases, conv).unwrap()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VerificationReport {
    pub dim: usize,
    pub tol: f64,
    pub orthonormality: f64,
    pub unbiasedness: f64,
    pub completeness: f64,
    pub max_deviation: f64,
    /// (α, k) of the worst offending vector, 0-based
    pub worst: Option<(usize, usize)>,
    pub pass: bool,
}

pub fn verify_mub(m: &MubSet, tol: f64) -> VerificationReport {
    let d = m.dim;
    let kets: Vec<Vec<Vec<C64>>> = (0..m.num_bases()).map(|a| (0..d).map(|k| m.ket(a, k)).collect()).collect();
    let mut ortho: f64 = 0.0;
    let mut unb: f64 = 0.0;
    let mut comp: f64 = 0.0;
    let mut worst_dev = 0.0;
    let mut worst = None;
    let inv_d = 1.0 / d as f64;
    let mut note = |dev: f64, at: (usize, usize)| {
        if dev > worst_dev {
            worst_dev = dev;
            worst = Some(at);
        }
    };
    for a in 0..kets.len() {
        for k in 0..d {
            for b in a..kets.len() {
                let l0 = if b == a { k } else { 0 };
                for l in l0..d {
                    let ip = crate::linalg::inner(&kets[a][k], &kets[b][l]);
                    if a == b {
                        let want = if k == l { 1.0 } else { 0.0 };
                        let dev = (ip - c(want, 0.0)).norm();
                        ortho = ortho.max(dev);
                        note(dev, (a, k));
                    } else {
                        let dev = (ip.norm_sqr() - inv_d).abs();
                        unb = unb.max(dev);
                        note(dev, (a, k));
                    }
                }
            }
        }
        let mut sum = CMat::zeros(d);
        for k in 0..d {
            sum.axpy(1.0, &CMat::outer(&kets[a][k]));
        }
        sum.add_identity(-1.0);
        let dev = sum.max_abs();
        comp = comp.max(dev);
        note(dev, (a, 0));
    }
    let max_deviation = ortho.max(unb).max(comp);
    VerificationReport {
        dim: d,
        tol,
        orthonormality: ortho,
        unbiasedness: unb,
        completeness: comp,
        max_deviation,
        worst: if max_deviation > tol { worst } else { None },
        pass: max_deviation < tol,
    }
}

/// Z_α = Σ_k q^k Π_{αk} for the qutrit set, written out explicitly.
pub fn complementary_observables_qutrit(m: &MubSet) -> Result<[CMat; 4]> {
    if m.dim != 3 {
        return Err(Error::InvalidInput(format!("complementary observables need d = 3, got {}", m.dim)));
    }
    let reference = qutrit();
    if m.bases.iter().zip(&reference.bases).any(|(a, b)| (a - b).max_abs() > 1e-12) {
        return Err(Error::InvalidInput("complementary observables need the standard qutrit set".into()));
    }
    let z = |alpha: i64| {
        let mut m = CMat::zeros(3);
        m[(0, 2)] = qpow(1 - alpha);
        m[(1, 0)] = c(1.0, 0.0);
        m[(2, 1)] = qpow(alpha - 1);
        m
    };
    let mut z4 = CMat::zeros(3);
    for k in 0..3 {
        z4[(k, k)] = qpow(k as i64);
    }
    Ok([z(1), z(2), z(3), z4])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_matches_galois_ring_n1() {
        let pr = galois_ring(1);
        let pa = pauli();
        for (a, b) in pr.bases.iter().zip(&pa.bases) {
            assert!((a - b).max_abs() < 1e-15);
        }
    }

    #[test]
    fn qubit_bases_are_pauli_eigenbases() {
        let m = build_mub(2).unwrap();
        let sx = CMat::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let sy = CMat::from_rows(&[vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]]).unwrap();
        let sz = CMat::from_real_diag(&[1.0, -1.0]);
        for (a, s) in [sx, sy, sz].iter().enumerate() {
            for k in 0..2 {
                let v = m.ket(a, k);
                let sv = s.mul_vec(&v);
                let ev = crate::linalg::inner(&v, &sv);
                for i in 0..2 {
                    assert!((sv[i] - v[i] * ev).norm() < 1e-15);
                }
            }
        }
        assert_eq!(m.computational_index(), Some(2));
    }

    #[test]
    fn all_small_dims_verify() {
        for d in [2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 25, 27] {
            let m = build_mub(d).unwrap();
            let r = verify_mub(&m, 1e-10);
            assert!(r.pass, "d={} {:?}", d, r);
            assert_eq!(m.computational_index(), Some(d));
        }
    }

    #[test]
    fn d4_tight() {
        let r = verify_mub(&build_mub(4).unwrap(), 1e-12);
        assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn rejects_non_prime_powers() {
        for d in [1, 6, 10, 12, 15] {
            assert!(build_mub(d).is_err());
        }
        let msg = build_mub(6).unwrap_err().to_string();
        assert!(msg.contains("6 = 2·3 not a prime power"));
    }

    #[test]
    fn scaled_column_fails_and_is_named() {
        let mut m = build_mub(3).unwrap();
        for i in 0..3 {
            m.bases[1][(i, 2)] *= 1.01;
        }
        let r = verify_mub(&m, 1e-12);
        assert!(!r.pass);
        assert_eq!(r.worst, Some((1, 2)));
    }

    #[test]
    fn complementary_observables() {
        let m = build_mub(3).unwrap();
        let z = complementary_observables_qutrit(&m).unwrap();
        let q = q3();
        for a in 0..4 {
            let mut s = CMat::zeros(3);
            for k in 0..3 {
                let pk = m.projector(a, k).scale_c(q.powu(k as u32));
                s = &s + &pk;
            }
            assert!((&s - &z[a]).max_abs() < 1e-12, "alpha {}", a);
            for b in 0..4 {
                for k in 0..3 {
                    let t = (&m.projector(a, k) * &z[b]).trace();
                    let want = if a == b { q.powu(k as u32) } else { c(0.0, 0.0) };
                    assert!((t - want).norm() < 1e-12);
                }
            }
        }
        let cube = &(&z[0] * &z[0]) * &z[0];
        assert!((&cube - &CMat::identity(3)).max_abs() < 1e-12);
        assert!(complementary_observables_qutrit(&build_mub(5).unwrap()).is_err());
    }

    #[test]
    fn projectors_idempotent() {
        for d in [3, 4, 8] {
            let m = build_mub(d).unwrap();
            for a in 0..=d {
                for k in 0..d {
                    let p = m.projector(a, k);
                    assert!((&(&p * &p) - &p).max_abs() < 1e-12);
                }
            }
        }
    }
}
