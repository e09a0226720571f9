use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed |a_jk - conj(a_kj)| before an input is rejected as non-Hermitian.
    pub hermitian: f64,
    /// Jacobi sweeps stop once every off-diagonal magnitude is below this (relative to max(1, ‖A‖_F)).
    pub jacobi: f64,
    /// Eigenvalues closer than this to the minimum are treated as degenerate.
    pub degenerate: f64,
    /// Minimum eigenvalue floor for "physical".
    pub psd: f64,
    pub trace: f64,
    pub row_sum: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}

pub const TOL: Tolerances = Tolerances {
    hermitian: 1e-12,
    jacobi: 1e-13,
    degenerate: 1e-10,
    psd: 1e-10,
    trace: 1e-12,
    row_sum: 1e-12,
};

const MAX_SWEEPS: usize = 100;

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CMat { n, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!("expected a square matrix, got {} rows", n)));
        }
        Ok(CMat { n, data: rows.concat() })
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// |v⟩⟨v|
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        CMat { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        CMat { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// self += s * other
    pub fn axpy(&mut self, s: f64, other: &CMat) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn add_identity(&mut self, s: f64) {
        for i in 0..self.n {
            self[(i, i)].re += s;
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// (A + A†)/2
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// ⟨u|A|u⟩ real part
    pub fn expectation(&self, u: &[C64]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..self.n {
                row += self[(i, j)] * u[j];
            }
            acc += u[i].conj() * row;
        }
        acc.re
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn determinant(&self) -> C64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = C64::new(1.0, 0.0);
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm())).unwrap();
            if a[piv * n + col].norm() == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if piv != col {
                for k in 0..n {
                    a.swap(piv * n + k, col * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= f * v;
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl<'a> Mul<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n, "matrix product dimension mismatch");
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n);
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a CMat> for &'a CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n);
        CMat { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            for j in 0..self.n {
                let z = self[(i, j)];
                write!(f, " {:+.6}{:+.6}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Tr(AB) for Hermitian A, B.
pub fn hs_inner(a: &CMat, b: &CMat) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch(format!("hs_inner: {} vs {}", a.n, b.n)));
    }
    Ok(hs(a, b))
}

/// Unchecked Tr(AB), real part.
#[inline]
pub fn hs(a: &CMat, b: &CMat) -> f64 {
    let n = a.n;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a.data[i * n + j];
            let y = b.data[j * n + i];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: CMat,
}

impl EigenDecomposition {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// V f(Λ) V†
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        CMat::from_fn(n, |i, j| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += self.vectors[(i, k)] * self.vectors[(j, k)].conj() * fv[k];
            }
            acc
        })
    }

    pub fn reconstruct(&self) -> CMat {
        self.map(|x| x)
    }
}

/// Cyclic Jacobi with complex unitary rotations; eigenvalues ascending.
pub fn eigen_hermitian(a: &CMat) -> Result<EigenDecomposition> {
    let scale = a.max_abs().max(1.0);
    let defect = a.hermitian_defect();
    if defect > TOL.hermitian * scale {
        return Err(Error::NonHermitian(defect));
    }
    Ok(jacobi(a))
}

/// Eigenvalues only.
pub fn eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    eigen_hermitian(a).map(|e| e.values)
}

pub fn min_eigenvalue(a: &CMat) -> Result<f64> {
    eigen_hermitian(a).map(|e| e.values[0])
}

pub(crate) fn jacobi(a: &CMat) -> EigenDecomposition {
    let n = a.n;
    let mut m = a.hermitian_part();
    let mut v = CMat::identity(n);
    let thresh = TOL.jacobi * m.frobenius().max(1.0);

    for _ in 0..MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off < thresh {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r < thresh * 1e-3 {
                    continue;
                }
                let ph = apq / r;
                let theta = (m[(q, q)].re - m[(p, p)].re) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let phc = ph.conj();
                // U = [[c, s], [-s e^{-iφ}, c e^{-iφ}]] acting on columns p, q
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c - akq * phc * s;
                    m[(k, q)] = akp * s + akq * phc * c;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c - aqk * ph * s;
                    m[(q, k)] = apk * s + aqk * ph * c;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * phc * s;
                    v[(k, q)] = vkp * s + vkq * phc * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMat::from_fn(n, |r, c| v[(r, order[c])]);
    EigenDecomposition { values, vectors }
}

/// Unit vector spanning the minimum eigenspace, with a deterministic choice when that space is degenerate:
/// project e_j (first j with nonzero projection) onto the eigenspace, normalize, and make component j real positive.
pub fn min_eig_vector(e: &EigenDecomposition) -> Vec<C64> {
    let n = e.values.len();
    let lo = e.values[0];
    let deg: Vec<usize> = (0..n).take_while(|&k| e.values[k] - lo <= TOL.degenerate).collect();
    if deg.len() == 1 {
        let mut v = e.vector(0);
        phase_fix(&mut v);
        return v;
    }
    for j in 0..n {
        let mut proj = vec![C64::new(0.0, 0.0); n];
        for &k in &deg {
            let c = e.vectors[(j, k)].conj();
            for i in 0..n {
                proj[i] += e.vectors[(i, k)] * c;
            }
        }
        let norm = proj.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for z in proj.iter_mut() {
                *z /= norm;
            }
            let ph = proj[j].conj() / proj[j].norm();
            for z in proj.iter_mut() {
                *z *= ph;
            }
            return proj;
        }
    }
    e.vector(0)
}

/// Makes the first component of largest magnitude real and positive.
fn phase_fix(v: &mut [C64]) {
    let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z0) = v.iter().copied().find(|z| z.norm() > 0.5 * big && z.norm() > 0.0) {
        let ph = z0.conj() / z0.norm();
        for z in v.iter_mut() {
            *z *= ph;
        }
    }
}

/// Rank-1 projector onto the eigenvector of the smallest eigenvalue.
pub fn min_eig_projector(a: &CMat) -> Result<CMat> {
    let e = eigen_hermitian(a)?;
    Ok(CMat::outer(&min_eig_vector(&e)))
}

pub fn normalize(v: &mut [C64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
}

pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}
