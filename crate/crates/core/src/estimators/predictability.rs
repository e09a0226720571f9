use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Entropic,
    Purity,
    /// max − min; for d ≠ 3 this is an extension of the qutrit linear bet.
    Betting,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Entropic, Measure::Purity, Measure::Betting];

    pub fn name(&self) -> &'static str {
        match self {
            Measure::Entropic => "entropic",
            Measure::Purity => "purity",
            Measure::Betting => "betting",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "entropic" | "ent" => Ok(Measure::Entropic),
            "purity" | "pur" => Ok(Measure::Purity),
            "betting" | "bet" => Ok(Measure::Betting),
            _ => Err(Error::InvalidInput(format!("unknown measure '{}' (entropic, purity, betting)", s))),
        }
    }
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Predictability of a d-outcome distribution, in [0, 1].
pub fn predictability(p: &[f64], measure: Measure) -> f64 {
    let d = p.len() as f64;
    match measure {
        Measure::Entropic => p.iter().map(|&x| xlogx(x) + x * d.ln()).sum::<f64>() / d.ln(),
        Measure::Purity => d / (d - 1.0) * p.iter().map(|&x| (x - 1.0 / d).powi(2)).sum::<f64>(),
        Measure::Betting => {
            let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
            hi - lo
        }
    }
}

/// Log-sum-exp smoothed max (sign = 1) or min (sign = −1) at temperature τ.
fn soft_extreme(p: &[f64], sign: f64, tau: f64) -> f64 {
    let m = p.iter().map(|&x| sign * x).fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = p.iter().map(|&x| ((sign * x - m) / tau).exp()).sum();
    sign * (m + tau * s.ln())
}

fn soft_weights(p: &[f64], sign: f64, tau: f64) -> Vec<f64> {
    let m = p.iter().map(|&x| sign * x).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = p.iter().map(|&x| ((sign * x - m) / tau).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Natural-log scaled predictability used inside the objective: ln d · P(p).
/// The betting measure is replaced by its log-sum-exp smoothing at temperature `tau`.
pub(crate) fn scaled_value(p: &[f64], measure: Measure, tau: f64) -> f64 {
    let d = p.len() as f64;
    match measure {
        Measure::Betting => d.ln() * (soft_extreme(p, 1.0, tau) - soft_extreme(p, -1.0, tau)),
        _ => d.ln() * predictability(p, measure),
    }
}

/// ∂(ln d · P)/∂p_l
pub(crate) fn scaled_gradient(p: &[f64], measure: Measure, tau: f64) -> Vec<f64> {
    let d = p.len() as f64;
    match measure {
        Measure::Entropic => p.iter().map(|&x| x.max(1e-300).ln() + 1.0 + d.ln()).collect(),
        Measure::Purity => p.iter().map(|&x| d.ln() * 2.0 * d / (d - 1.0) * (x - 1.0 / d)).collect(),
        Measure::Betting => {
            let a = soft_weights(p, 1.0, tau);
            let b = soft_weights(p, -1.0, tau);
            a.iter().zip(&b).map(|(x, y)| d.ln() * (x - y)).collect()
        }
    }
}

/// ln d · [P(p + δ) − P(p)] evaluated without cancellation.
pub(crate) fn scaled_delta(p: &[f64], dp: &[f64], measure: Measure, tau: f64) -> f64 {
    let d = p.len() as f64;
    match measure {
        Measure::Entropic => p
            .iter()
            .zip(dp)
            .map(|(&x, &dx)| {
                let y = x + dx;
                let core = if x > 0.0 && y > 0.0 { y * (dx / x).ln_1p() + dx * x.ln() } else { xlogx(y) - xlogx(x) };
                core + dx * d.ln()
            })
            .sum(),
        Measure::Purity => {
            d.ln() * d / (d - 1.0) * p.iter().zip(dp).map(|(&x, &dx)| dx * (2.0 * (x - 1.0 / d) + dx)).sum::<f64>()
        }
        Measure::Betting => {
            let q: Vec<f64> = p.iter().zip(dp).map(|(x, y)| x + y).collect();
            scaled_value(&q, measure, tau) - scaled_value(p, measure, tau)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn extremes() {
        for d in [2usize, 3, 5, 7] {
            let u = vec![1.0 / d as f64; d];
            let mut det = vec![0.0; d];
            det[d - 1] = 1.0;
            for m in Measure::ALL {
                assert!(predictability(&u, m).abs() < 1e-15, "{} {}", m, d);
                assert!((predictability(&det, m) - 1.0).abs() < 1e-15, "{} {}", m, d);
            }
        }
    }

    #[test]
    fn half_half_zero() {
        let p = [0.5, 0.5, 0.0];
        assert!((predictability(&p, Measure::Purity) - 0.25).abs() < 1e-15);
        assert!((predictability(&p, Measure::Betting) - 0.5).abs() < 1e-15);
        // Σ p log₃(3p) = log₃(3/2)
        assert!((predictability(&p, Measure::Entropic) - (1.5f64).ln() / 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn names_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
        assert!("linear".parse::<Measure>().is_err());
    }

    #[test]
    fn smoothing_is_close_to_exact() {
        let p = [0.2, 0.5, 0.3];
        let exact = 3f64.ln() * predictability(&p, Measure::Betting);
        assert!((scaled_value(&p, Measure::Betting, 1e-5) - exact).abs() < 1e-9);
    }

    #[test]
    fn deltas_match_differences() {
        let p = [0.2, 0.5, 0.3];
        let dp = [1e-3, -4e-4, -6e-4];
        let q: Vec<f64> = p.iter().zip(&dp).map(|(a, b)| a + b).collect();
        for m in Measure::ALL {
            let direct = scaled_value(&q, m, 1e-5) - scaled_value(&p, m, 1e-5);
            assert!((scaled_delta(&p, &dp, m, 1e-5) - direct).abs() < 1e-13, "{}", m);
        }
    }

    fn dist(d: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, d).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>().max(1e-12);
            v.into_iter().map(|x| x / s).collect()
        })
    }

    fn pair(d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (dist(d), dist(d), 0.0f64..=1.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn axioms_d2((p, q, l) in pair(2)) { check_axioms(&p, &q, l); }

        #[test]
        fn axioms_d3((p, q, l) in pair(3)) { check_axioms(&p, &q, l); }

        #[test]
        fn axioms_d5((p, q, l) in pair(5)) { check_axioms(&p, &q, l); }
    }

    fn check_axioms(p: &[f64], q: &[f64], l: f64) {
        let mix: Vec<f64> = p.iter().zip(q).map(|(a, b)| l * a + (1.0 - l) * b).collect();
        for m in Measure::ALL {
            let (pp, pq, pm) = (predictability(p, m), predictability(q, m), predictability(&mix, m));
            assert!((-1e-12..=1.0 + 1e-12).contains(&pp), "{} {:?} {}", m, p, pp);
            assert!(pm <= l * pp + (1.0 - l) * pq + 1e-12, "{} convexity", m);
        }
    }
}
