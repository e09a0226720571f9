//! File formats: JSON with 17 significant digits, CSV tables, atomic writes.

use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::estimators::{Diagnostics, EstimatorKind, EstimatorResult, Measure};
use crate::linalg::CMat;
use crate::mub::{MubSet, VerificationReport};
use crate::negativity::{marker, LambdaMinResult};
use crate::tomography::ProbabilityTable;

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "MUBTOMO_CONFIG";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    /// From the file extension, if it names a known format.
    pub fn from_path(p: &Path) -> Option<Format> {
        match p.extension()?.to_str()? {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::InvalidInput(format!("unknown format '{}' (json, csv)", s))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

/// Compact JSON with every double written as `d.dddddddddddddddde±x`.
struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{}", sig17(v))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

/// 17 significant digits in scientific notation.
pub fn sig17(v: f64) -> String {
    format!("{:.16e}", v)
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    v.serialize(&mut ser).map_err(|e| Error::Parse(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

/// Write to a temporary file beside `path`, flush to disk, then rename over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {}", path.display(), e))))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {}", e))
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn flat(m: &CMat) -> Vec<[f64; 2]> {
    m.as_slice().iter().map(|&z| pair(z)).collect()
}

fn unflat(d: usize, v: &[[f64; 2]]) -> Result<CMat> {
    if v.len() != d * d {
        return Err(Error::Parse(format!("matrix has {} entries, expected {}", v.len(), d * d)));
    }
    Ok(CMat::from_fn(d, |i, j| C64::new(v[i * d + j][0], v[i * d + j][1])))
}

// ---- MUB sets

/// Each basis is a row-major d×d matrix whose column k is the k-th basis vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MubSetFile {
    pub dim: usize,
    pub convention: String,
    pub bases: Vec<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verification: Option<VerificationReport>,
}

impl MubSetFile {
    pub fn new(m: &MubSet, verification: Option<VerificationReport>) -> Self {
        MubSetFile { dim: m.dim, convention: m.convention.clone(), bases: m.bases.iter().map(flat).collect(), verification }
    }

    pub fn to_mub(&self) -> Result<MubSet> {
        let bases = self.bases.iter().map(|b| unflat(self.dim, b)).collect::<Result<Vec<_>>>()?;
        MubSet::new(self.dim, bases, self.convention.clone())
    }
}

/// One row per vector component: alpha, k, i, re, im with ⟨i|ψ_{αk}⟩ = re + i·im.
pub fn mub_csv(m: &MubSet) -> Result<String> {
    let d = m.dim;
    let rows = (0..m.num_bases()).flat_map(|a| {
        (0..d).flat_map(move |k| {
            (0..d).map(move |i| {
                let z = m.bases[a][(i, k)];
                vec![a.to_string(), k.to_string(), i.to_string(), sig17(z.re), sig17(z.im)]
            })
        })
    });
    csv_string(&["alpha", "k", "i", "re", "im"], rows.collect::<Vec<_>>())
}

pub fn read_mub(path: &Path) -> Result<MubSet> {
    from_json::<MubSetFile>(&read_to_string(path)?)?.to_mub()
}

// ---- probability tables

pub fn table_csv(t: &ProbabilityTable) -> Result<String> {
    let rows = t
        .probs
        .iter()
        .enumerate()
        .flat_map(|(a, r)| r.iter().enumerate().map(move |(k, &p)| vec![a.to_string(), k.to_string(), sig17(p)]));
    csv_string(&["alpha", "k", "p"], rows.collect::<Vec<_>>())
}

/// Rows may come in any order; every (alpha, k) with alpha < M and k < d must appear once.
pub fn parse_table_csv(s: &str) -> Result<ProbabilityTable> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(s.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["alpha", "k", "p"] {
        return Err(Error::Parse(format!("expected header alpha,k,p, found {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut entries = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let a: usize = rec[0].parse().map_err(|_| Error::Parse(format!("bad alpha '{}'", &rec[0])))?;
        let k: usize = rec[1].parse().map_err(|_| Error::Parse(format!("bad k '{}'", &rec[1])))?;
        let p: f64 = rec[2].parse().map_err(|_| Error::Parse(format!("bad p '{}'", &rec[2])))?;
        entries.push((a, k, p));
    }
    let mm = entries.iter().map(|e| e.0 + 1).max().ok_or_else(|| Error::Parse("empty table".into()))?;
    let d = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
    let mut probs = vec![vec![f64::NAN; d]; mm];
    for (a, k, p) in entries {
        if !probs[a][k].is_nan() {
            return Err(Error::Parse(format!("duplicate entry alpha={} k={}", a, k)));
        }
        probs[a][k] = p;
    }
    if let Some((a, k)) = (0..mm).flat_map(|a| (0..d).map(move |k| (a, k))).find(|&(a, k)| probs[a][k].is_nan()) {
        return Err(Error::Parse(format!("missing entry alpha={} k={}", a, k)));
    }
    ProbabilityTable::new(d, probs)
}

pub fn parse_table(s: &str, format: Format) -> Result<ProbabilityTable> {
    let t: ProbabilityTable = match format {
        Format::Json => from_json(s)?,
        Format::Csv => parse_table_csv(s)?,
    };
    t.validate()?;
    Ok(t)
}

/// Format from the extension, JSON otherwise.
pub fn read_table(path: &Path) -> Result<ProbabilityTable> {
    parse_table(&read_to_string(path)?, Format::from_path(path).unwrap_or_default())
}

// ---- estimator results

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResultFile {
    pub kind: EstimatorKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub measure: Option<Measure>,
    pub dim: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// row-major
    pub matrix: Vec<[f64; 2]>,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub shannon_unmeasured: f64,
    pub vn_entropy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z_coords: Option<Vec<[f64; 2]>>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub seed: Option<u64>,
    pub constraint_violation: f64,
    pub diagnostics: Diagnostics,
}

impl From<&EstimatorResult> for EstimatorResultFile {
    fn from(r: &EstimatorResult) -> Self {
        EstimatorResultFile {
            kind: r.kind,
            measure: r.measure,
            dim: r.dim,
            m: r.m,
            matrix: flat(&r.estimator),
            eigenvalues: r.eigenvalues.clone(),
            min_eigenvalue: r.min_eigenvalue,
            shannon_unmeasured: r.shannon_unmeasured,
            vn_entropy: r.vn_entropy,
            z_coords: r.z_coords.map(|z| z.iter().map(|&v| pair(v)).collect()),
            iterations: r.iterations,
            residual: r.residual,
            converged: r.converged,
            seed: r.seed,
            constraint_violation: r.constraint_violation,
            diagnostics: r.diagnostics.clone(),
        }
    }
}

impl EstimatorResultFile {
    pub fn matrix(&self) -> Result<CMat> {
        unflat(self.dim, &self.matrix)
    }
}

/// i, j, re, im for every matrix entry.
pub fn matrix_csv(m: &CMat) -> Result<String> {
    let d = m.dim();
    let rows = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| {
        let z = m[(i, j)];
        vec![i.to_string(), j.to_string(), sig17(z.re), sig17(z.im)]
    });
    csv_string(&["i", "j", "re", "im"], rows.collect::<Vec<_>>())
}

// ---- λ_min scans

pub const LAMBDA_MIN_HEADER: [&str; 5] = ["d", "M", "lambda_min", "saturated", "restarts"];

pub fn lambda_min_csv(results: &[LambdaMinResult]) -> Result<String> {
    let rows = results.iter().map(|r| {
        vec![r.d.to_string(), r.m.to_string(), sig17(r.lambda_min), r.bound_saturated.to_string(), r.restarts_used.to_string()]
    });
    csv_string(&LAMBDA_MIN_HEADER, rows.collect::<Vec<_>>())
}

/// JSON rows carry the plot marker class in addition to the CSV columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaMinRow {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub lambda_min: f64,
    pub saturated: bool,
    pub restarts: usize,
    pub converged: bool,
    pub marker: String,
}

pub fn lambda_min_rows(results: &[LambdaMinResult]) -> Vec<LambdaMinRow> {
    results
        .iter()
        .map(|r| LambdaMinRow {
            d: r.d,
            m: r.m,
            lambda_min: r.lambda_min,
            saturated: r.bound_saturated,
            restarts: r.restarts_used,
            converged: r.converged,
            marker: marker(r).to_string(),
        })
        .collect()
}

// ---- run configuration

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub dim: Option<usize>,
    /// Number of measured bases M; all rows of the input table when absent.
    pub measured: Option<usize>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub kind: EstimatorKind,
    pub measure: Measure,
    pub seed: u64,
    pub mu: f64,
    /// Initial step size; 0.1/d when absent.
    pub epsilon: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub samples: usize,
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            dim: None,
            measured: None,
            input: None,
            output: None,
            kind: EstimatorKind::LeastBias,
            measure: Measure::Entropic,
            seed: 1,
            mu: 1e-4,
            epsilon: None,
            tol: 1e-10,
            max_iter: 200_000,
            restarts: 100,
            samples: 100_000,
            format: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        from_json(&read_to_string(path)?)
    }

    /// The file named by the config environment variable, or defaults.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => RunConfig::load(Path::new(&p)),
            _ => Ok(RunConfig::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{least_bias, ulin_result, LeastBiasConfig};
    use crate::fixtures;
    use crate::mub::{build_mub, verify_mub};
    use crate::tomography::born_probabilities;
    use proptest::prelude::*;

    #[test]
    fn sig17_is_exact() {
        for v in [0.1, 1.0 / 3.0, -5.0 / 108.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, -0.0] {
            let s = sig17(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{}", s);
        }
        assert_eq!(sig17(0.5), "5.0000000000000000e-1");
    }

    proptest! {
        #[test]
        fn json_doubles_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = to_json(&vec![v]).unwrap();
            let back: Vec<f64> = from_json(&s).unwrap();
            prop_assert_eq!(back[0].to_bits(), v.to_bits());
        }
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(to_json(&vec![f64::NAN]).unwrap().trim(), "[null]");
    }

    #[test]
    fn mub_round_trip() {
        for d in [2, 3, 4] {
            let m = build_mub(d).unwrap();
            let f = MubSetFile::new(&m, Some(verify_mub(&m, 1e-10)));
            let back: MubSetFile = from_json(&to_json(&f).unwrap()).unwrap();
            assert_eq!(back, f);
            let m2 = back.to_mub().unwrap();
            for (a, b) in m.bases.iter().zip(&m2.bases) {
                assert_eq!(a, b);
            }
        }
        let csv = mub_csv(&build_mub(2).unwrap()).unwrap();
        assert!(csv.starts_with("alpha,k,i,re,im\n"));
        assert_eq!(csv.lines().count(), 1 + 3 * 2 * 2);
    }

    #[test]
    fn table_round_trip_both_formats() {
        let m = build_mub(3).unwrap();
        let t = born_probabilities(&fixtures::rho_w(0.1), &m, 3).unwrap();
        assert_eq!(parse_table(&to_json(&t).unwrap(), Format::Json).unwrap(), t);
        let csv = table_csv(&t).unwrap();
        assert!(csv.starts_with("alpha,k,p\n"));
        assert_eq!(parse_table(&csv, Format::Csv).unwrap(), t);
    }

    #[test]
    fn table_csv_errors() {
        assert!(matches!(parse_table_csv("a,b,c\n0,0,1\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_table_csv("alpha,k,p\n0,0,1\n0,0,0\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_table_csv("alpha,k,p\n0,0,1\n1,1,1\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_table_csv("alpha,k,p\n0,0,0.7\n0,1,0.7\n"), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn estimator_result_round_trip() {
        let m = build_mub(3).unwrap();
        let t = born_probabilities(&fixtures::rho_w(0.1), &m, 2).unwrap();
        for r in [ulin_result(&t, &m).unwrap(), least_bias(&t, &m, &LeastBiasConfig::default()).unwrap()] {
            let f = EstimatorResultFile::from(&r);
            let s = to_json(&f).unwrap();
            let back: EstimatorResultFile = from_json(&s).unwrap();
            assert_eq!(back, f);
            assert_eq!(back.matrix().unwrap(), r.estimator);
            assert_eq!(to_json(&back).unwrap(), s);
        }
    }

    #[test]
    fn run_config_round_trip() {
        let c = RunConfig::default();
        assert_eq!(from_json::<RunConfig>(&to_json(&c).unwrap()).unwrap(), c);
        let c = RunConfig {
            command: Some("estimate".into()),
            dim: Some(3),
            measured: Some(2),
            input: Some("in.csv".into()),
            kind: EstimatorKind::BayesMean,
            measure: Measure::Betting,
            epsilon: Some(0.01),
            format: Some(Format::Csv),
            ..Default::default()
        };
        let s = to_json(&c).unwrap();
        assert_eq!(from_json::<RunConfig>(&s).unwrap(), c);
        assert!(from_json::<RunConfig>("{\"dimm\": 3}").is_err());
        assert_eq!(from_json::<RunConfig>("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        atomic_write(&p, b"first").unwrap();
        atomic_write(&p, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn lambda_min_csv_header() {
        let r = LambdaMinResult {
            d: 4,
            m: 2,
            lambda_min: -0.25,
            optimizer_rho: None,
            optimizer_sigma: None,
            restarts_used: 3,
            iterations: 1,
            residual: 0.0,
            converged: true,
            bound_saturated: true,
            history: vec![],
        };
        let s = lambda_min_csv(&[r]).unwrap();
        assert_eq!(s, "d,M,lambda_min,saturated,restarts\n4,2,-2.5000000000000000e-1,true,3\n");
    }
}
