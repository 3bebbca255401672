//! Lower bounds on the interactive capacity of BEC(ε).
//!
//! The direct bound comes from running the simulator at the smallest
//! admissible round overhead. For large ε the channel is first reduced to
//! BEC(ε') by repeating every bit `ρ` times.

use serde::Serialize;

use crate::error::{check_unit, Error, Result};

/// Target erasure probability of the repetition reduction.
pub const DEFAULT_EPS_PRIME: f64 = 0.073;

/// Constant `c` in `C_I(ε) ≥ c · C_Sh(ε)`.
pub const CAPACITY_RATIO_CONSTANT: f64 = 0.104;

pub fn shannon_capacity(epsilon: f64) -> Result<f64> {
    Ok(1.0 - check_unit("epsilon", epsilon)?)
}

/// `(1-ε)^2 / (2 (2 - (1-ε)^2))`; 0 at ε = 1.
pub fn direct_lb(epsilon: f64) -> Result<f64> {
    let q = 1.0 - check_unit("epsilon", epsilon)?;
    let q2 = q * q;
    Ok(q2 / (2.0 * (2.0 - q2)))
}

/// Largest ε at which `direct_lb(ε) / (1-ε) ≥ c`.
///
/// With `u = 1-ε` the condition is `u / (2(2-u^2)) ≥ c`, i.e.
/// `2c u^2 + u - 4c ≥ 0`, whose positive root gives the crossover.
pub fn direct_threshold(c: f64) -> f64 {
    let u = (-1.0 + (1.0 + 32.0 * c * c).sqrt()) / (4.0 * c);
    1.0 - u
}

/// Smallest `ρ` with `ε^ρ ≤ ε'`: `⌈ln ε' / ln ε⌉`.
pub fn repetition_factor(epsilon: f64, eps_prime: f64) -> Result<u32> {
    if !(0.0 < eps_prime && eps_prime < epsilon && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < eps' < eps < 1, got eps' = {eps_prime}, eps = {epsilon}"
        )));
    }
    let mut rho = (eps_prime.ln() / epsilon.ln()).ceil().max(1.0) as u32;
    // guard the ceiling against rounding in the log ratio
    while epsilon.powi(rho as i32) > eps_prime {
        rho += 1;
    }
    while rho > 1 && epsilon.powi(rho as i32 - 1) <= eps_prime {
        rho -= 1;
    }
    Ok(rho)
}

/// Relaxed ratio bound `r / (1 - ln ε')` on `C_I(ε) / C_Sh(ε)`, valid for
/// every `ε ∈ (ε', 1)` when rate `r` is achievable on BEC(ε').
pub fn repetition_lb_ratio(eps_prime: f64, r: f64) -> Result<f64> {
    if !(0.0 < eps_prime && eps_prime < 1.0) {
        return Err(Error::OutOfDomain {
            name: "eps_prime",
            value: eps_prime,
            range: "(0, 1)",
        });
    }
    if !(r >= 0.0) {
        return Err(Error::OutOfDomain {
            name: "r",
            value: r,
            range: "[0, inf)",
        });
    }
    Ok(r / (1.0 - eps_prime.ln()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub shannon: f64,
    pub direct_lb: f64,
    /// `direct_lb(ε') / ρ`, when ε > ε'.
    pub repetition_lb: Option<f64>,
    /// `(1-ε) · repetition_lb_ratio(ε', direct_lb(ε'))`, when ε > ε'.
    pub relaxed_lb: Option<f64>,
    pub best_lb: f64,
    /// `best_lb / shannon`.
    pub ratio: f64,
    pub rho: Option<u32>,
    pub eps_prime: Option<f64>,
}

impl BoundReport {
    pub fn direct_ratio(&self) -> f64 {
        self.direct_lb / self.shannon
    }
}

/// Best available lower bound at ε with the default ε' = 0.073.
pub fn best_lb(epsilon: f64) -> Result<BoundReport> {
    best_lb_with(epsilon, DEFAULT_EPS_PRIME)
}

pub fn best_lb_with(epsilon: f64, eps_prime: f64) -> Result<BoundReport> {
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::OutOfDomain {
            name: "epsilon",
            value: epsilon,
            range: "(0, 1)",
        });
    }
    let shannon = shannon_capacity(epsilon)?;
    let direct = direct_lb(epsilon)?;
    let (mut repetition_lb, mut relaxed_lb, mut rho, mut used_prime) = (None, None, None, None);
    if epsilon > eps_prime {
        let base = direct_lb(eps_prime)?;
        let r = repetition_factor(epsilon, eps_prime)?;
        repetition_lb = Some(base / r as f64);
        relaxed_lb = Some(shannon * repetition_lb_ratio(eps_prime, base)?);
        rho = Some(r);
        used_prime = Some(eps_prime);
    }
    let best = [Some(direct), repetition_lb, relaxed_lb]
        .into_iter()
        .flatten()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BoundReport {
        epsilon,
        shannon,
        direct_lb: direct,
        repetition_lb,
        relaxed_lb,
        best_lb: best,
        ratio: best / shannon,
        rho,
        eps_prime: used_prime,
    })
}

/// `lo, lo + step, ...` up to `hi` (inclusive within half a step), built by
/// index to avoid accumulated drift.
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidConfig(format!("bad grid {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 0.5).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shannon() {
        assert_eq!(shannon_capacity(0.0).unwrap(), 1.0);
        assert_eq!(shannon_capacity(1.0).unwrap(), 0.0);
        assert!((shannon_capacity(0.3).unwrap() - 0.7).abs() < 1e-15);
        assert!(shannon_capacity(1.2).is_err());
    }

    #[test]
    fn direct_values() {
        assert_eq!(direct_lb(0.0).unwrap(), 0.5);
        assert_eq!(direct_lb(1.0).unwrap(), 0.0);
        let at_prime = direct_lb(0.073).unwrap();
        assert!((0.3766..=0.3768).contains(&at_prime), "{at_prime}");
        assert!((direct_lb(0.5).unwrap() - 0.25 / 3.5).abs() < 1e-12);
    }

    #[test]
    fn repetition_examples() {
        assert_eq!(repetition_factor(0.5, 0.25).unwrap(), 2);
        assert_eq!(repetition_factor(0.9, 0.073).unwrap(), 25);
        assert_eq!(repetition_factor(0.073 + 1e-9, 0.073).unwrap(), 2);
        assert!(repetition_factor(0.073, 0.073).is_err());
        assert!(repetition_factor(0.05, 0.073).is_err());
        assert!(repetition_factor(1.0, 0.073).is_err());
    }

    #[test]
    fn relaxed_ratio_examples() {
        assert!((repetition_lb_ratio(1.0 / std::f64::consts::E, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let c = repetition_lb_ratio(0.073, direct_lb(0.073).unwrap()).unwrap();
        assert!((c - 0.10414).abs() < 1e-5, "{c}");
        assert!(c >= CAPACITY_RATIO_CONSTANT);
        assert_eq!(repetition_lb_ratio(0.5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn crossover() {
        let t = direct_threshold(CAPACITY_RATIO_CONSTANT);
        assert!((t - 0.61484).abs() < 2e-5, "{t}");
        let at = best_lb(t).unwrap();
        assert!((at.direct_ratio() - CAPACITY_RATIO_CONSTANT).abs() < 1e-12);
    }

    #[test]
    fn report_examples() {
        let r = best_lb(0.3).unwrap();
        assert!((r.direct_ratio() - 0.49 / (3.02 * 0.7)).abs() < 1e-12);
        assert!(r.ratio >= 0.104);

        let r = best_lb(0.9).unwrap();
        assert_eq!(r.rho, Some(25));
        assert!(r.repetition_lb.unwrap() / r.shannon >= 0.104);

        let r = best_lb(0.05).unwrap();
        assert!(r.rho.is_none() && r.repetition_lb.is_none());
        assert_eq!(r.best_lb, r.direct_lb);

        assert!(best_lb(0.0).is_err());
        assert!(best_lb(1.0).is_err());
    }

    #[test]
    fn grid_points() {
        let g = grid(0.001, 0.999, 0.001).unwrap();
        assert_eq!(g.len(), 999);
        assert!((g[998] - 0.999).abs() < 1e-12);
        assert_eq!(grid(0.5, 0.5, 0.1).unwrap(), vec![0.5]);
        assert!(grid(0.5, 0.4, 0.1).is_err());
        assert!(grid(0.1, 0.4, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn report_invariants(eps in 0.0001f64..0.9999, prime in 0.01f64..0.5) {
            let r = best_lb_with(eps, prime).unwrap();
            prop_assert!(0.0 <= r.best_lb && r.best_lb <= r.shannon && r.shannon <= 1.0);
            if let (Some(rho), Some(exact), Some(relaxed)) = (r.rho, r.repetition_lb, r.relaxed_lb) {
                prop_assert!(eps.powi(rho as i32) <= prime);
                prop_assert!(rho == 1 || eps.powi(rho as i32 - 1) > prime);
                prop_assert!(exact >= relaxed - 1e-15);
            }
        }
    }
}
