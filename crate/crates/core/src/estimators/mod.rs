//! Physical estimators consistent with a table of measured MUB probabilities.

mod bayes;
mod free;
mod least_bias;
mod max_mineig;
mod max_vn;
pub mod predictability;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use bayes::{bayes_mean_estimator, bayes_mean_with, BayesConfig};
pub use free::FreeSpace;
pub use least_bias::{dmu_objective, gradient_w, least_bias, LeastBiasConfig, StepRecord};
pub use max_mineig::{max_mineig_estimator, max_mineig_with, MineigConfig};
pub use max_vn::{max_vn_estimator, max_vn_with, VnConfig};
pub use predictability::{predictability, Measure};

use crate::error::{Error, Result};
use crate::linalg::{eigen_hermitian, CMat};
use crate::mub::{complementary_observables_qutrit, MubSet};
use crate::tomography::{ulin_estimator, z_from_rows, ProbabilityTable};

/// Kets and projectors of all d+1 bases.
pub struct Frame {
    pub d: usize,
    pub kets: Vec<Vec<Vec<C64>>>,
    pub projs: Vec<Vec<CMat>>,
    qutrit: bool,
}

impl Frame {
    pub fn new(m: &MubSet) -> Self {
        let kets: Vec<Vec<Vec<C64>>> = (0..m.num_bases()).map(|a| (0..m.dim).map(|k| m.ket(a, k)).collect()).collect();
        let projs = kets.iter().map(|b| b.iter().map(|v| CMat::outer(v)).collect()).collect();
        Frame { d: m.dim, kets, projs, qutrit: complementary_observables_qutrit(m).is_ok() }
    }

    pub fn row(&self, rho: &CMat, a: usize) -> Vec<f64> {
        self.kets[a].iter().map(|v| rho.expectation(v)).collect()
    }

    pub fn rows(&self, rho: &CMat) -> Vec<Vec<f64>> {
        (0..=self.d).map(|a| self.row(rho, a)).collect()
    }

    pub fn z(&self, rho: &CMat) -> Option<[C64; 4]> {
        self.qutrit.then(|| z_from_rows(&self.rows(rho)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Ulin,
    LeastBias,
    MaxVn,
    MaxMineig,
    BayesMean,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Ulin => "ulin",
            EstimatorKind::LeastBias => "least_bias",
            EstimatorKind::MaxVn => "max_vn",
            EstimatorKind::MaxMineig => "max_mineig",
            EstimatorKind::BayesMean => "bayes_mean",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ulin" => EstimatorKind::Ulin,
            "least_bias" | "least-bias" | "lb" => EstimatorKind::LeastBias,
            "max_vn" | "max-vn" | "vn" => EstimatorKind::MaxVn,
            "max_mineig" | "max-mineig" | "mineig" => EstimatorKind::MaxMineig,
            "bayes_mean" | "bayes-mean" | "bm" => EstimatorKind::BayesMean,
            _ => return Err(Error::InvalidInput(format!("unknown estimator kind '{}'", s))),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub is_physical: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub determinant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ulin_shortcut: Option<bool>,
    /// Smallest accepted objective increment along the iteration.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_increment: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unpolished_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub effective_sample_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z_stderr: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mixing_ok: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct EstimatorResult {
    pub kind: EstimatorKind,
    pub measure: Option<Measure>,
    pub dim: usize,
    pub m: usize,
    pub estimator: CMat,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub shannon_unmeasured: f64,
    pub vn_entropy: f64,
    pub z_coords: Option<[C64; 4]>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub seed: Option<u64>,
    /// max |Tr(ρΠ_{αk}) − p_{αk}| over measured bases
    pub constraint_violation: f64,
    pub diagnostics: Diagnostics,
    pub history: Vec<StepRecord>,
}

impl EstimatorResult {
    pub(crate) fn build(kind: EstimatorKind, frame: &Frame, t: &ProbabilityTable, rho: CMat) -> Result<Self> {
        let e = eigen_hermitian(&rho)?;
        let rows = frame.rows(&rho);
        let violation = rows
            .iter()
            .zip(&t.probs)
            .flat_map(|(r, p)| r.iter().zip(p).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        Ok(EstimatorResult {
            kind,
            measure: None,
            dim: t.dim,
            m: t.m,
            shannon_unmeasured: shannon_rows(&rows[t.m..]),
            vn_entropy: vn_from_eigs(&e.values),
            z_coords: frame.z(&rho),
            min_eigenvalue: e.values[0],
            eigenvalues: e.values,
            estimator: rho,
            iterations: 0,
            residual: 0.0,
            converged: true,
            seed: None,
            constraint_violation: violation,
            diagnostics: Diagnostics::default(),
            history: Vec::new(),
        })
    }

    pub fn z4(&self) -> Option<C64> {
        self.z_coords.map(|z| z[3])
    }
}

fn check(t: &ProbabilityTable, m: &MubSet) -> Result<()> {
    t.validate()?;
    if t.dim != m.dim {
        return Err(Error::DimensionMismatch(format!("table d = {}, MUB d = {}", t.dim, m.dim)));
    }
    Ok(())
}

fn shannon_rows(rows: &[Vec<f64>]) -> f64 {
    -rows.iter().flatten().map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 }).sum::<f64>()
}

fn vn_from_eigs(l: &[f64]) -> f64 {
    -l.iter().map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 }).sum::<f64>()
}

/// −Σ_{β≥M} Σ_l p_{βl} ln p_{βl}, natural log, 0 ln 0 = 0.
pub fn shannon_unmeasured(rho: &CMat, m: &MubSet, mm: usize) -> f64 {
    let rows: Vec<Vec<f64>> = (mm..m.num_bases()).map(|a| (0..m.dim).map(|k| m.prob(rho, a, k)).collect()).collect();
    shannon_rows(&rows)
}

/// −Tr(ρ ln ρ)
pub fn von_neumann_entropy(rho: &CMat) -> Result<f64> {
    Ok(vn_from_eigs(&eigen_hermitian(rho)?.values))
}

/// The ULIN estimator packaged as an estimator result.
pub fn ulin_result(t: &ProbabilityTable, m: &MubSet) -> Result<EstimatorResult> {
    check(t, m)?;
    let frame = Frame::new(m);
    let u = ulin_estimator(t, m)?;
    let mut r = EstimatorResult::build(EstimatorKind::Ulin, &frame, t, u.matrix)?;
    r.diagnostics.is_physical = Some(u.is_physical);
    r.diagnostics.determinant = Some(u.eigenvalues.iter().product());
    Ok(r)
}

/// Dispatch by kind with default settings.
pub fn run_estimator(
    kind: EstimatorKind,
    t: &ProbabilityTable,
    m: &MubSet,
    lb: &LeastBiasConfig,
    bayes: &BayesConfig,
) -> Result<EstimatorResult> {
    match kind {
        EstimatorKind::Ulin => ulin_result(t, m),
        EstimatorKind::LeastBias => least_bias(t, m, lb),
        EstimatorKind::MaxVn => max_vn_estimator(t, m),
        EstimatorKind::MaxMineig => max_mineig_estimator(t, m),
        EstimatorKind::BayesMean => bayes_mean_with(t, m, bayes),
    }
}
