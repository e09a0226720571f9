use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{hs, jacobi, CMat};
use crate::mub::MubSet;
use crate::tomography::{ulin_estimator, ProbabilityTable};

use super::predictability::{scaled_delta, scaled_gradient, scaled_value};
use super::{check, max_mineig, EstimatorKind, EstimatorResult, Frame, Measure};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LeastBiasConfig {
    pub mu: f64,
    /// Initial and minimum trial step; None means 0.1/d.
    pub epsilon: Option<f64>,
    /// Target for ‖Wρ − Tr(Wρ)ρ‖_F.
    pub tol: f64,
    pub max_iter: usize,
    pub measure: Measure,
    /// Log-sum-exp temperature replacing max/min in the betting measure.
    pub betting_smoothing: f64,
    /// Return the ULIN estimator directly when it is positive semidefinite.
    pub ulin_shortcut: bool,
    /// Move the converged iterate onto the measured constraints, staying positive semidefinite.
    pub polish: bool,
    /// Halve μ until the estimator moves by less than 1e-6.
    pub auto_mu: bool,
    pub record_history: bool,
}

impl Default for LeastBiasConfig {
    fn default() -> Self {
        LeastBiasConfig {
            mu: 1e-4,
            epsilon: None,
            tol: 1e-10,
            max_iter: 200_000,
            measure: Measure::Entropic,
            betting_smoothing: 1e-5,
            ulin_shortcut: true,
            polish: true,
            auto_mu: false,
            record_history: false,
        }
    }
}

impl LeastBiasConfig {
    pub fn with_measure(measure: Measure) -> Self {
        LeastBiasConfig { measure, ..Default::default() }
    }
}

/// Per accepted step: objective increment, deviation of the trace from 1, smallest eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub increment: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

struct Objective<'a> {
    frame: &'a Frame,
    t: &'a ProbabilityTable,
    mu: f64,
    measure: Measure,
    tau: f64,
}

impl<'a> Objective<'a> {
    fn rows(&self, rho: &CMat) -> Vec<Vec<f64>> {
        self.frame.rows(rho)
    }

    fn value(&self, rows: &[Vec<f64>]) -> f64 {
        let m = self.t.m;
        let mut v = 0.0;
        for (p, tr) in self.t.probs.iter().zip(rows) {
            for (&pk, &tk) in p.iter().zip(tr) {
                if pk > 0.0 {
                    if tk <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    v += pk * tk.ln();
                }
            }
        }
        for r in &rows[m..] {
            v -= self.mu * self.unmeasured(r);
        }
        v
    }

    /// Second-term summand per unmeasured basis; for the entropic measure this is −H so that μ multiplies the entropy.
    fn unmeasured(&self, r: &[f64]) -> f64 {
        match self.measure {
            Measure::Entropic => r.iter().map(|&x| if x > 0.0 { x * x.ln() } else { 0.0 }).sum(),
            _ => scaled_value(r, self.measure, self.tau),
        }
    }

    fn gradient(&self, rows: &[Vec<f64>]) -> CMat {
        let d = self.frame.d;
        let m = self.t.m;
        let mut w = CMat::zeros(d);
        for (a, (p, tr)) in self.t.probs.iter().zip(rows).enumerate() {
            for (k, (&pk, &tk)) in p.iter().zip(tr).enumerate() {
                if pk > 0.0 {
                    w.axpy(pk / tk, &self.frame.projs[a][k]);
                }
            }
        }
        for (b, r) in rows.iter().enumerate().skip(m) {
            let g: Vec<f64> = match self.measure {
                Measure::Entropic => r.iter().map(|&x| x.max(1e-300).ln()).collect(),
                _ => scaled_gradient(r, self.measure, self.tau),
            };
            for (l, gl) in g.iter().enumerate() {
                w.axpy(-self.mu * gl, &self.frame.projs[b][l]);
            }
        }
        w
    }

    /// D(ρ + δρ) − D(ρ) from the current rows and the rows of δρ.
    fn increment(&self, rows: &[Vec<f64>], drows: &[Vec<f64>]) -> f64 {
        let m = self.t.m;
        let mut v = 0.0;
        for ((p, tr), dr) in self.t.probs.iter().zip(rows).zip(drows) {
            for ((&pk, &tk), &dk) in p.iter().zip(tr).zip(dr) {
                if pk > 0.0 {
                    let x = dk / tk;
                    if x <= -1.0 || !x.is_finite() {
                        return f64::NEG_INFINITY;
                    }
                    v += pk * x.ln_1p();
                }
            }
        }
        for (r, dr) in rows[m..].iter().zip(&drows[m..]) {
            let delta = match self.measure {
                Measure::Entropic => scaled_delta(r, dr, Measure::Entropic, self.tau) - dr.iter().sum::<f64>() * (r.len() as f64).ln(),
                _ => scaled_delta(r, dr, self.measure, self.tau),
            };
            v -= self.mu * delta;
        }
        v
    }
}

fn objective<'a>(frame: &'a Frame, t: &'a ProbabilityTable, cfg: &LeastBiasConfig) -> Objective<'a> {
    Objective { frame, t, mu: cfg.mu, measure: cfg.measure, tau: cfg.betting_smoothing }
}

/// D_μ(ρ): Σ_{α<M,k} p ln Tr(ρΠ) + μ·(unmeasured Shannon entropy), or − μ ln d Σ_β P for the other measures.
pub fn dmu_objective(rho: &CMat, t: &ProbabilityTable, m: &MubSet, cfg: &LeastBiasConfig) -> Result<f64> {
    check(t, m)?;
    let frame = Frame::new(m);
    let obj = objective(&frame, t, cfg);
    Ok(obj.value(&obj.rows(rho)))
}

/// W(ρ) with δD = Tr(δρ W) for traceless δρ.
pub fn gradient_w(rho: &CMat, t: &ProbabilityTable, m: &MubSet, cfg: &LeastBiasConfig) -> Result<CMat> {
    check(t, m)?;
    let frame = Frame::new(m);
    let obj = objective(&frame, t, cfg);
    Ok(obj.gradient(&obj.rows(rho)))
}

fn extremal_residual(w: &CMat, rho: &CMat) -> f64 {
    let c = hs(w, rho);
    let mut r = w * rho;
    r.axpy(-c, rho);
    r.frobenius()
}

struct Iterated {
    rho: CMat,
    iterations: usize,
    residual: f64,
    converged: bool,
    min_increment: f64,
    history: Vec<StepRecord>,
}

/// ρ_{n+1} = (1+εΔ)ρ_n(1+εΔ)/(1+ε²Tr(Δ²ρ_n)), Δ = W − Tr(Wρ_n), from I/d.
/// Trial steps follow a Barzilai–Borwein rule on the pair (ρ, Δρ + ρΔ), halved until D_μ does not drop.
fn iterate(obj: &Objective, cfg: &LeastBiasConfig) -> Iterated {
    let d = obj.frame.d;
    let eps0 = cfg.epsilon.unwrap_or(0.1 / d as f64);
    let mut eps = eps0;
    let mut rho = CMat::identity(d).scale(1.0 / d as f64);
    let mut rows = obj.rows(&rho);
    let mut w = obj.gradient(&rows);
    let mut prev: Option<(CMat, CMat)> = None;
    let mut min_increment = f64::INFINITY;
    let mut history = Vec::new();
    let mut residual = extremal_residual(&w, &rho);
    let mut iterations = 0;
    let mut converged = residual < cfg.tol;

    while !converged && iterations < cfg.max_iter {
        let c = hs(&w, &rho);
        let mut delta = w.clone();
        delta.add_identity(-c);
        let dr = &delta * &rho;
        let t2 = hs(&delta, &dr);
        let g = &dr + &dr.adjoint();
        if let Some((rho_prev, g_prev)) = &prev {
            let s = &rho - rho_prev;
            let y = &g - g_prev;
            let sy = hs(&s, &y);
            let yy = hs(&y, &y);
            eps = if sy < 0.0 && yy > 0.0 { (-sy / yy).max(eps0) } else { eps * 1.5 };
        }
        prev = Some((rho.clone(), g.clone()));
        let drd = &dr * &delta;
        let mut accepted = None;
        for _ in 0..200 {
            let s = 1.0 + eps * eps * t2;
            let mut drho = g.scale(eps);
            drho.axpy(eps * eps, &drd);
            drho.axpy(-eps * eps * t2, &rho);
            let drho = drho.scale(1.0 / s).hermitian_part();
            let drows = obj.rows(&drho);
            let inc = obj.increment(&rows, &drows);
            if inc > -1e-12 {
                accepted = Some((drho, inc));
                break;
            }
            eps *= 0.5;
        }
        let Some((drho, inc)) = accepted else { break };
        let mut next = &rho + &drho;
        let tr = next.trace().re;
        next = next.scale(1.0 / tr);
        min_increment = min_increment.min(inc);
        if cfg.record_history {
            history.push(StepRecord { increment: inc, trace_error: next.trace().re - 1.0, min_eigenvalue: jacobi(&next).min() });
        }
        rho = next;
        rows = obj.rows(&rho);
        w = obj.gradient(&rows);
        iterations += 1;
        residual = extremal_residual(&w, &rho);
        converged = residual < cfg.tol;
    }
    Iterated { rho, iterations, residual, converged, min_increment, history }
}

/// Restore the measured probabilities exactly; if that leaves the cone, pull toward `interior` until the
/// smallest eigenvalue is zero.
pub(crate) fn polish(rho: &CMat, frame: &Frame, t: &ProbabilityTable, interior: impl FnOnce() -> Option<CMat>) -> CMat {
    let mut r = rho.clone();
    for (a, p) in t.probs.iter().enumerate() {
        let tr = frame.row(rho, a);
        for (k, (&pk, &tk)) in p.iter().zip(&tr).enumerate() {
            r.axpy(pk - tk, &frame.projs[a][k]);
        }
    }
    let r = r.hermitian_part();
    let lo = jacobi(&r).min();
    if lo >= 0.0 {
        return r;
    }
    let Some(c) = interior() else { return r };
    let c_lo = jacobi(&c).min();
    if c_lo <= 0.0 {
        // no strictly interior point: the feasible set is (nearly) a single boundary point
        return if c_lo > lo { c } else { r };
    }
    let mix = |s: f64| {
        let mut m = r.scale(1.0 - s);
        m.axpy(s, &c);
        m
    };
    let (mut lo_s, mut hi_s) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo_s + hi_s);
        if jacobi(&mix(mid)).min() >= 0.0 {
            hi_s = mid;
        } else {
            lo_s = mid;
        }
    }
    mix(hi_s)
}

/// Least-bias estimator: the physical state reproducing the measured rows with the least predictable
/// unmeasured bases, as the maximizer of D_μ.
pub fn least_bias(t: &ProbabilityTable, m: &MubSet, cfg: &LeastBiasConfig) -> Result<EstimatorResult> {
    check(t, m)?;
    if cfg.auto_mu {
        return auto_mu(t, m, cfg);
    }
    let frame = Frame::new(m);
    let obj = objective(&frame, t, cfg);
    if cfg.ulin_shortcut {
        let u = ulin_estimator(t, m)?;
        if u.is_physical {
            let rows = obj.rows(&u.matrix);
            let residual = extremal_residual(&obj.gradient(&rows), &u.matrix);
            let mut r = EstimatorResult::build(EstimatorKind::LeastBias, &frame, t, u.matrix)?;
            r.measure = Some(cfg.measure);
            r.residual = residual;
            r.diagnostics.ulin_shortcut = Some(true);
            r.diagnostics.is_physical = Some(true);
            return Ok(r);
        }
    }
    let it = iterate(&obj, cfg);
    let raw_violation = {
        let rows = obj.rows(&it.rho);
        rows.iter().zip(&t.probs).flat_map(|(r, p)| r.iter().zip(p).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max)
    };
    let rho = if cfg.polish {
        polish(&it.rho, &frame, t, || max_mineig::max_mineig_with(t, m, &Default::default()).ok().map(|r| r.estimator))
    } else {
        it.rho
    };
    let mut r = EstimatorResult::build(EstimatorKind::LeastBias, &frame, t, rho)?;
    r.measure = Some(cfg.measure);
    r.iterations = it.iterations;
    r.residual = it.residual;
    r.converged = it.converged;
    r.history = it.history;
    r.diagnostics.ulin_shortcut = Some(false);
    r.diagnostics.min_increment = it.min_increment.is_finite().then_some(it.min_increment);
    r.diagnostics.unpolished_violation = Some(raw_violation);
    Ok(r)
}

fn auto_mu(t: &ProbabilityTable, m: &MubSet, cfg: &LeastBiasConfig) -> Result<EstimatorResult> {
    let mut c = LeastBiasConfig { auto_mu: false, ..cfg.clone() };
    let mut last = least_bias(t, m, &c)?;
    for _ in 0..8 {
        c.mu *= 0.5;
        let next = least_bias(t, m, &c)?;
        let moved = (&next.estimator - &last.estimator).frobenius();
        last = next;
        if moved < 1e-6 {
            break;
        }
    }
    Ok(last)
}
