//! The interpolation engine: pick a truncation order from the tail bound,
//! convert `p`-coefficients to coefficients of `f = ln p`, evaluate the
//! truncated series at `z = 1`, and exponentiate.
//!
//! With `p(z) ≠ 0` on the open disk of radius `β > 1` and `deg p ≤ m`, the
//! degree-`k` Taylor polynomial `T_k` of `f` at `0` satisfies
//!
//! ```text
//! |f(1) − T_k(1)| ≤ m / ((k+1) · β^k · (β−1)).
//! ```
//!
//! Targeting an additive log error of `ln(1+ε)` makes the reported value
//! accurate to relative error `ε`. The certificate covers truncation only;
//! roundoff in the coefficient pipeline is reported separately as a heuristic
//! indicator ([`crate::cluster::EnumStats::comp_residual`]) and is not folded
//! into the bound.

use crate::cluster::{self, ClusterOptions, CoeffVector, EnumStats};
use crate::model::{check_admissible, Instance, ToleranceConfig};
use crate::Error;

/// A chosen truncation order and the tail bound it achieves.
#[derive(Debug, Clone, Copy)]
pub struct InterpPlan {
    /// Disk ratio `β = γ/γ′`.
    pub beta: f64,
    /// Target relative error.
    pub epsilon: f64,
    /// Minimal order whose bound is at most `ln(1+ε)`.
    pub k: usize,
    /// `m / ((k+1)·β^k·(β−1))` at the chosen `k`.
    pub bound: f64,
}

/// A certified estimate of `p(1)`.
#[derive(Debug, Clone)]
pub struct Estimate {
    /// `exp(T_k(1))`; always positive.
    pub value: f64,
    /// `T_k(1) = Σ_{s=1}^k f_s`.
    pub log_value: f64,
    /// Certified additive bound on `|log_value − ln p(1)|`.
    pub additive_log_error_bound: f64,
    /// The `p`-coefficients that entered the recurrence (padded with zeros
    /// beyond degree `m`).
    pub coeffs: CoeffVector,
    /// Log-Taylor coefficients `f_1 .. f_k`.
    pub f: Vec<f64>,
    pub plan: InterpPlan,
    pub stats: EnumStats,
}

/// Tail bound of the degree-`k` truncation.
pub fn tail_bound(m: usize, k: usize, beta: f64) -> f64 {
    m as f64 / ((k as f64 + 1.0) * beta.powi(k as i32) * (beta - 1.0))
}

/// The minimal `k ≥ 0` with `m/((k+1)·β^k·(β−1)) ≤ ln(1+ε)`.
pub fn choose_order(m: usize, epsilon: f64, beta: f64) -> Result<InterpPlan, Error> {
    if !beta.is_finite() || beta <= 1.0 {
        return Err(Error::Invalid(format!("disk ratio beta must exceed 1, got {beta}")));
    }
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 1.0 {
        return Err(Error::Invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let target = epsilon.ln_1p();
    let mut k = 0;
    loop {
        let bound = tail_bound(m, k, beta);
        if bound <= target {
            return Ok(InterpPlan {
                beta,
                epsilon,
                k,
                bound,
            });
        }
        k += 1;
    }
}

/// Coefficients `f_1 .. f_k` of `f = ln p` from `c_0 .. c_k`, `c_0 = 1`.
///
/// Solves the convolution `s·c_s = Σ_{j=1}^{s} j·f_j·c_{s−j}` forward; the
/// principal branch (`f(0) = 0`) needs no complex arithmetic because only
/// real coefficients at `0` are involved.
pub fn log_taylor(c: &[f64]) -> Vec<f64> {
    assert!(!c.is_empty() && c[0] == 1.0, "log_taylor requires c_0 = 1");
    let k = c.len() - 1;
    let mut f = vec![0.0; k];
    for s in 1..=k {
        let mut conv = 0.0;
        for j in 1..s {
            conv += j as f64 * f[j - 1] * c[s - j];
        }
        f[s - 1] = c[s] - conv / s as f64;
    }
    f
}

/// The full pipeline: admissibility, order selection, coefficients,
/// log-Taylor, exponentiation. Fails fast with the admissibility report if
/// the hypotheses do not hold.
pub fn integrate(inst: &Instance, cfg: &ToleranceConfig, epsilon: f64) -> Result<Estimate, Error> {
    integrate_with(inst, cfg, epsilon, &ClusterOptions::default())
}

pub fn integrate_with(
    inst: &Instance,
    cfg: &ToleranceConfig,
    epsilon: f64,
    opts: &ClusterOptions,
) -> Result<Estimate, Error> {
    let report = check_admissible(inst, cfg);
    if !report.pass {
        return Err(Error::Admissibility(Box::new(report)));
    }
    let plan = choose_order(inst.m(), epsilon, report.beta)?;

    // Enumeration stops at degree m (higher p-coefficients vanish exactly);
    // the recurrence still runs to k with zero padding, which is exact.
    let k_enum = plan.k.min(inst.m());
    let out = cluster::coeff_vector_with(inst, k_enum, opts)?;
    let mut padded = out.coeffs.c.clone();
    padded.resize(plan.k + 1, 0.0);

    let f = log_taylor(&padded);
    let mut acc = 0.0;
    for &fs in &f {
        acc += fs;
    }
    Ok(Estimate {
        value: acc.exp(),
        log_value: acc,
        additive_log_error_bound: plan.bound,
        coeffs: CoeffVector { c: padded },
        f,
        plan,
        stats: out.stats,
    })
}
