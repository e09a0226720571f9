use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigen_hermitian, CMat, TOL};
use crate::mub::{complementary_observables_qutrit, q3, MubSet};

/// Probabilities p_{αk} for the first M bases (0-based α).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub dim: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub probs: Vec<Vec<f64>>,
}

impl ProbabilityTable {
    /// Validated constructor: shape, entries in [0, 1] and unit row sums.
    pub fn new(dim: usize, probs: Vec<Vec<f64>>) -> Result<Self> {
        let t = ProbabilityTable { dim, m: probs.len(), probs };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if d < 2 {
            return Err(Error::InvalidInput(format!("dimension {} below 2", d)));
        }
        if self.m == 0 || self.m > d + 1 || self.probs.len() != self.m {
            return Err(Error::InvalidInput(format!("M = {} with {} rows is outside 1..={}", self.m, self.probs.len(), d + 1)));
        }
        for (a, row) in self.probs.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidInput(format!("row {} has {} entries, expected {}", a, row.len(), d)));
            }
            if let Some(k) = row.iter().position(|&p| !p.is_finite() || p < -TOL.row_sum || p > 1.0 + TOL.row_sum) {
                return Err(Error::Inconsistent(format!("p[{}][{}] = {} outside [0, 1]", a, k, row[k])));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > TOL.row_sum {
                return Err(Error::Inconsistent(format!("row {} sums to {:.17}", a, s)));
            }
        }
        Ok(())
    }

    /// w_{αk} = p_{αk} − 1/d
    pub fn w(&self) -> Vec<Vec<f64>> {
        let inv = 1.0 / self.dim as f64;
        self.probs.iter().map(|r| r.iter().map(|p| p - inv).collect()).collect()
    }

    /// Keep only the first `m` rows.
    pub fn truncate(&self, m: usize) -> Self {
        ProbabilityTable { dim: self.dim, m, probs: self.probs[..m].to_vec() }
    }
}

fn check_dims(rho: &CMat, m: &MubSet) -> Result<()> {
    if rho.dim() != m.dim {
        return Err(Error::DimensionMismatch(format!("state is {}x{}, MUB set has d = {}", rho.dim(), rho.dim(), m.dim)));
    }
    Ok(())
}

/// p_{αk} = Tr(Π_{αk} ρ) for the first `mm` bases.
pub fn born_probabilities(rho: &CMat, m: &MubSet, mm: usize) -> Result<ProbabilityTable> {
    check_dims(rho, m)?;
    if mm == 0 || mm > m.dim + 1 {
        return Err(Error::InvalidInput(format!("M = {} outside 1..={}", mm, m.dim + 1)));
    }
    let probs = (0..mm).map(|a| (0..m.dim).map(|k| m.prob(rho, a, k)).collect()).collect();
    Ok(ProbabilityTable { dim: m.dim, m: mm, probs })
}

/// ρ̂_α = Σ_k p_{αk} Π_{αk}
pub fn single_basis_estimator(row: &[f64], alpha: usize, m: &MubSet) -> Result<CMat> {
    if row.len() != m.dim || alpha > m.dim {
        return Err(Error::DimensionMismatch(format!("row of length {} for basis {} in d = {}", row.len(), alpha, m.dim)));
    }
    let mut out = CMat::zeros(m.dim);
    for (k, &p) in row.iter().enumerate() {
        out.axpy(p, &m.projector(alpha, k));
    }
    Ok(out)
}

/// I/d + Σ_{α<M,k} w_{αk} Π_{αk}, no diagnostics.
pub fn ulin_matrix(t: &ProbabilityTable, m: &MubSet) -> CMat {
    let d = m.dim;
    let mut out = CMat::identity(d).scale(1.0 / d as f64);
    let inv = 1.0 / d as f64;
    for (a, row) in t.probs.iter().enumerate() {
        for (k, &p) in row.iter().enumerate() {
            out.axpy(p - inv, &m.projector(a, k));
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct UlinResult {
    pub matrix: CMat,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub is_physical: bool,
}

impl UlinResult {
    pub fn determinant(&self) -> f64 {
        self.eigenvalues.iter().product()
    }
}

pub fn ulin_estimator(t: &ProbabilityTable, m: &MubSet) -> Result<UlinResult> {
    if t.dim != m.dim {
        return Err(Error::DimensionMismatch(format!("table d = {}, MUB d = {}", t.dim, m.dim)));
    }
    let matrix = ulin_matrix(t, m);
    let eigenvalues = eigen_hermitian(&matrix)?.values;
    let min_eigenvalue = eigenvalues[0];
    Ok(UlinResult { matrix, eigenvalues, min_eigenvalue, is_physical: min_eigenvalue >= -TOL.psd })
}

/// ρ = Σ_α ρ̂_α − 1 from a complete table.
pub fn full_reconstruct(t: &ProbabilityTable, m: &MubSet) -> Result<CMat> {
    if t.m != m.dim + 1 {
        return Err(Error::InvalidInput(format!("full reconstruction needs M = {}, got {}", m.dim + 1, t.m)));
    }
    let rho = ulin_matrix(t, m);
    let lo = eigen_hermitian(&rho)?.min();
    if lo < -1e-8 {
        return Err(Error::Inconsistent(format!("reconstruction has eigenvalue {:.3e}; probabilities are not physical", lo)));
    }
    Ok(rho)
}

/// z_α = Σ_k q^k p_{αk} for all four qutrit bases.
pub fn z_coordinates(rho: &CMat, m: &MubSet) -> Result<[C64; 4]> {
    check_dims(rho, m)?;
    complementary_observables_qutrit(m)?;
    let t = born_probabilities(rho, m, 4)?;
    Ok(z_from_rows(&t.probs))
}

/// z_α for each row of a qutrit table.
pub fn z_from_rows(rows: &[Vec<f64>]) -> [C64; 4] {
    let q = q3();
    let mut z = [C64::new(0.0, 0.0); 4];
    for (a, row) in rows.iter().enumerate().take(4) {
        z[a] = row.iter().enumerate().map(|(k, &p)| q.powu(k as u32) * p).sum();
    }
    z
}

/// p_{αk} = (1 + q^{−k} z_α + q^k z_α*)/3
pub fn probs_from_z(z: C64) -> Vec<f64> {
    let q = q3();
    (0..3u32).map(|k| (1.0 + 2.0 * (q.powu(k).conj() * z).re) / 3.0).collect()
}

/// ρ = (1 + Σ_α (z_α Z_α† + z_α* Z_α))/3
pub fn rho_from_z(z: &[C64; 4], m: &MubSet) -> Result<CMat> {
    let zs = complementary_observables_qutrit(m)?;
    let mut rho = CMat::identity(3);
    for (a, za) in zs.iter().enumerate() {
        let term = &za.adjoint().scale_c(z[a]) + &za.scale_c(z[a].conj());
        rho = &rho + &term;
    }
    Ok(rho.scale(1.0 / 3.0))
}

/// Qutrit table of the first `mm` bases built directly from z-coordinates.
pub fn table_from_z(z: &[C64], mm: usize) -> Result<ProbabilityTable> {
    ProbabilityTable::new(3, z.iter().take(mm).map(|&za| probs_from_z(za)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mub::build_mub;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn maximally_mixed_is_uniform() {
        for d in [2, 3, 5] {
            let m = build_mub(d).unwrap();
            let t = born_probabilities(&CMat::identity(d).scale(1.0 / d as f64), &m, d + 1).unwrap();
            assert!(t.probs.iter().flatten().all(|&p| close(p, 1.0 / d as f64, 1e-15)));
        }
    }

    #[test]
    fn basis_projector_rows() {
        let m = build_mub(5).unwrap();
        let t = born_probabilities(&m.projector(0, 2), &m, 6).unwrap();
        for k in 0..5 {
            assert!(close(t.probs[0][k], if k == 2 { 1.0 } else { 0.0 }, 1e-14));
            for a in 1..6 {
                assert!(close(t.probs[a][k], 0.2, 1e-14));
            }
        }
    }

    #[test]
    fn antisym_qutrit_z_coordinates() {
        let m = build_mub(3).unwrap();
        let z = z_coordinates(&fixtures::antisym_qutrit(), &m).unwrap();
        let h = C64::new(-0.5, 0.0);
        for a in 0..3 {
            assert!((z[a] - h).norm() < 1e-14);
        }
        assert!((z[3] - h * q3() * q3()).norm() < 1e-14);
    }

    #[test]
    fn single_basis_estimates() {
        let m = build_mub(3).unwrap();
        let u = single_basis_estimator(&[1.0 / 3.0; 3], 1, &m).unwrap();
        assert!((&u - &CMat::identity(3).scale(1.0 / 3.0)).max_abs() < 1e-15);
        let rho = fixtures::antisym_qutrit();
        let t = born_probabilities(&rho, &m, 4).unwrap();
        let e4 = single_basis_estimator(&t.probs[3], 3, &m).unwrap();
        assert!((&e4 - &CMat::from_real_diag(&[0.5, 0.5, 0.0])).max_abs() < 1e-15);
        let e1 = single_basis_estimator(&t.probs[0], 0, &m).unwrap();
        for b in 1..4 {
            for l in 0..3 {
                assert!(close(m.prob(&e1, b, l), 1.0 / 3.0, 1e-14));
            }
        }
    }

    #[test]
    fn antisym_qutrit_reconstruction_and_ulin() {
        let m = build_mub(3).unwrap();
        let rho = fixtures::antisym_qutrit();
        let t = born_probabilities(&rho, &m, 4).unwrap();
        let r = full_reconstruct(&t, &m).unwrap();
        assert!((&r - &rho).max_abs() < 1e-12);
        let u2 = ulin_estimator(&t.truncate(2), &m).unwrap();
        assert!(!u2.is_physical);
        assert!(close(u2.determinant(), -1.0 / 27.0, 1e-12));
        assert!(close(u2.matrix.determinant().re, -1.0 / 27.0, 1e-12));
        let u3 = ulin_estimator(&t.truncate(3), &m).unwrap();
        assert!(close(u3.determinant(), -5.0 / 108.0, 1e-12));
    }

    #[test]
    fn ulin_reproduces_measured_and_predicts_uniform() {
        let m = build_mub(5).unwrap();
        let rho = fixtures::first_basis_pair(&m);
        let t = born_probabilities(&rho, &m, 3).unwrap();
        let u = ulin_matrix(&t, &m);
        assert!(close(u.trace().re, 1.0, 1e-12));
        for a in 0..6 {
            for k in 0..5 {
                let want = if a < 3 { t.probs[a][k] } else { 0.2 };
                assert!(close(m.prob(&u, a, k), want, 1e-12));
            }
        }
    }

    #[test]
    fn equal_two_basis_mixture_all_ulin_physical() {
        let m = build_mub(3).unwrap();
        let rho = fixtures::two_basis_mixture(0.5, 0.5);
        let t = born_probabilities(&rho, &m, 4).unwrap();
        for mm in 2..=4 {
            let u = ulin_estimator(&t.truncate(mm), &m).unwrap();
            assert!(u.is_physical);
            assert!((&u.matrix - &rho).max_abs() < 1e-12);
        }
    }

    #[test]
    fn z_round_trip() {
        let m = build_mub(3).unwrap();
        let rho = fixtures::rho_w(0.25);
        let z = z_coordinates(&rho, &m).unwrap();
        let back = rho_from_z(&z, &m).unwrap();
        assert!((&back - &rho).max_abs() < 1e-14);
        let t = born_probabilities(&rho, &m, 4).unwrap();
        for a in 0..4 {
            let p = probs_from_z(z[a]);
            for k in 0..3 {
                assert!(close(p[k], t.probs[a][k], 1e-14));
            }
        }
        assert!(close(z[3].re, 3.0 / 16.0, 1e-12));
        assert!(close(z[3].im, 0.324, 1e-3));
        assert!(z_coordinates(&CMat::identity(2).scale(0.5), &build_mub(2).unwrap()).is_err());
    }

    #[test]
    fn table_validation() {
        assert!(ProbabilityTable::new(3, vec![vec![0.5, 0.5, 0.0]]).is_ok());
        assert!(matches!(ProbabilityTable::new(3, vec![vec![0.5, 0.6, 0.0]]), Err(Error::Inconsistent(_))));
        assert!(matches!(ProbabilityTable::new(3, vec![vec![1.2, -0.2, 0.0]]), Err(Error::Inconsistent(_))));
        assert!(matches!(ProbabilityTable::new(3, vec![vec![0.5, 0.5]]), Err(Error::InvalidInput(_))));
        assert!(ProbabilityTable::new(3, vec![vec![1.0, 0.0, 0.0]; 5]).is_err());
    }

    #[test]
    fn inconsistent_full_table_rejected() {
        let m = build_mub(3).unwrap();
        let t = ProbabilityTable::new(3, vec![vec![1.0, 0.0, 0.0]; 4]).unwrap();
        assert!(matches!(full_reconstruct(&t, &m), Err(Error::Inconsistent(_))));
    }
}
