//! Application builders on top of the integrator.
//!
//! *Mollified logarithmic potentials.* Points `v_1..v_s ∈ ℝ^d` with pair
//! energy `−ln(1 + α‖v_i − v_j‖²)` over an edge set `E` have partition
//! function `(2π)^{-n/2} ∫ ∏_{{i,j}∈E} (1 + α‖v_i − v_j‖²) e^{-‖x‖²/2} dx`,
//! a product of quadratic forms over `n = d·s` variables. The per-edge matrix
//! is `Q = 2α·M_{ij}`, where `M_{ij}` carries identity `d`-blocks at
//! `(i,i)`, `(j,j)` and negated ones at `(i,j)`, `(j,i)`.
//!
//! *Feasibility scoring.* For positive semidefinite forms with
//! `Σ q_k = ‖x‖²/2`, the integral of `∏(1 + α·q_k)` is compared against the
//! certified ceiling `v_max = (α/β·e^{β/α−1})^m (1−β)^{-n/2}`, where `β`
//! solves `2m(1/β − 1/α) = n/(1−β)`. A score near 1 suggests the system
//! `q_k(x) = 1` has abundant near-solutions; a small score suggests it is far
//! from solvable. Heuristic only — there is no hard converse guarantee.

use crate::cluster::ClusterOptions;
use crate::interp::{self, Estimate};
use crate::model::{build_instance, Instance, ToleranceConfig};
use crate::oracle::{self, MCResult};
use crate::symmat::SymMatrix;
use crate::Error;
use num_complex::Complex64;

/// Per-edge interaction strength.
#[derive(Debug, Clone)]
pub enum EdgeAlpha {
    Uniform(f64),
    /// Parallel to the edge list.
    PerEdge(Vec<f64>),
}

/// A set of interacting point pairs in `ℝ^d`.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub d: usize,
    pub s_pts: usize,
    /// Unordered pairs `(i, j)` with `i < j`, 0-based point indices.
    pub edges: Vec<(usize, usize)>,
    pub alpha: EdgeAlpha,
}

impl PotentialSpec {
    pub fn new(
        d: usize,
        s_pts: usize,
        edges: Vec<(usize, usize)>,
        alpha: EdgeAlpha,
    ) -> Result<Self, Error> {
        if d == 0 {
            return Err(Error::Invalid("point dimension d must be positive".into()));
        }
        if s_pts < 2 {
            return Err(Error::Invalid("need at least two points".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &(i, j) in &edges {
            if i >= j || j >= s_pts {
                return Err(Error::Invalid(format!(
                    "edge ({i}, {j}) is not a pair of distinct points below {s_pts}"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::Invalid(format!("duplicate edge ({i}, {j})")));
            }
        }
        match &alpha {
            EdgeAlpha::Uniform(a) => {
                if !a.is_finite() || *a < 0.0 {
                    return Err(Error::Invalid(format!("alpha must be nonnegative, got {a}")));
                }
            }
            EdgeAlpha::PerEdge(list) => {
                if list.len() != edges.len() {
                    return Err(Error::Invalid(format!(
                        "{} per-edge alphas for {} edges",
                        list.len(),
                        edges.len()
                    )));
                }
                if list.iter().any(|a| !a.is_finite() || *a < 0.0) {
                    return Err(Error::Invalid("per-edge alphas must be nonnegative".into()));
                }
            }
        }
        Ok(PotentialSpec {
            d,
            s_pts,
            edges,
            alpha,
        })
    }

    pub fn n(&self) -> usize {
        self.d * self.s_pts
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    fn alpha_for(&self, edge_idx: usize) -> f64 {
        match &self.alpha {
            EdgeAlpha::Uniform(a) => *a,
            EdgeAlpha::PerEdge(list) => list[edge_idx],
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> PotentialSpec {
        PotentialSpec {
            alpha: EdgeAlpha::Uniform(alpha),
            ..self.clone()
        }
    }
}

/// All `s·(s−1)/2` pairs.
pub fn complete_edges(s_pts: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..s_pts {
        for j in (i + 1)..s_pts {
            edges.push((i, j));
        }
    }
    edges
}

/// One form `q(x) = α‖v_i − v_j‖²` per edge; point `p` owns variables
/// `p·d .. (p+1)·d`.
pub fn build_potential_instance(spec: &PotentialSpec) -> Result<Instance, Error> {
    let d = spec.d;
    let n = spec.n();
    let mats: Result<Vec<SymMatrix>, Error> = spec
        .edges
        .iter()
        .enumerate()
        .map(|(e, &(i, j))| {
            let a = 2.0 * spec.alpha_for(e);
            let mut triplets = Vec::with_capacity(3 * d);
            for t in 0..d {
                triplets.push((d * i + t, d * i + t, a));
                triplets.push((d * j + t, d * j + t, a));
                triplets.push((d * i + t, d * j + t, -a));
            }
            SymMatrix::from_triplets(n, &triplets)
        })
        .collect();
    build_instance(n, mats?)
}

/// Largest uniform `α` whose instance passes [`crate::model::check_admissible`].
///
/// The pair matrix has `‖Q‖ = 4α`, so `½‖Q‖ = 2α` against the bound
/// `γ′/divisor`; the graph (hence the divisor) does not depend on `α > 0`.
pub fn max_alpha_admissible(spec: &PotentialSpec, cfg: &ToleranceConfig) -> Result<f64, Error> {
    if spec.edges.is_empty() {
        return Err(Error::Invalid("need at least one edge".into()));
    }
    let probe = build_potential_instance(&spec.with_alpha(1.0))?;
    let report = crate::model::check_admissible(&probe, cfg);
    Ok(report.bound / 2.0)
}

/// The solved coupling for the feasibility score.
#[derive(Debug, Clone, Copy)]
pub struct FeasibilityParams {
    pub alpha: f64,
    /// Unique root of `2m(1/β − 1/α) = n/(1−β)` in `(0, 1)`.
    pub beta: f64,
    /// `t = 1/β − 1/α`, positive since the root always lands below `α`.
    pub t: f64,
    /// `ln v_max = m·(ln(α/β) + β/α − 1) − (n/2)·ln(1−β)`, kept in log space
    /// to avoid overflow at large `m`, `n`.
    pub log_v_max: f64,
}

impl FeasibilityParams {
    pub fn v_max(&self) -> f64 {
        self.log_v_max.exp()
    }
}

/// Bisection for `2m(1/β − 1/α) = n/(1−β)`: the left side is strictly
/// decreasing and the right side strictly increasing on `(0, 1)`, and they
/// cross exactly once (the left side blows up at `0⁺`, the right at `1⁻`).
/// Terminates when `|LHS − RHS| ≤ 1e−12·max(1, RHS)`.
pub fn solve_beta(m: usize, n: usize, alpha: f64) -> Result<FeasibilityParams, Error> {
    if m == 0 || n == 0 {
        return Err(Error::Invalid("solve_beta needs m ≥ 1 and n ≥ 1".into()));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Invalid(format!("alpha must be positive, got {alpha}")));
    }
    let mf = m as f64;
    let nf = n as f64;
    let residual = |beta: f64| 2.0 * mf * (1.0 / beta - 1.0 / alpha) - nf / (1.0 - beta);

    let mut lo = 0.5f64.min(alpha / 2.0);
    for _ in 0..4096 {
        if residual(lo) > 0.0 {
            break;
        }
        lo *= 0.5;
    }
    let mut hi = 0.75;
    for _ in 0..128 {
        if residual(hi) < 0.0 {
            break;
        }
        hi = 0.5 * (1.0 + hi);
    }

    let mut beta = 0.5 * (lo + hi);
    for _ in 0..200 {
        beta = 0.5 * (lo + hi);
        let r = residual(beta);
        let scale = (nf / (1.0 - beta)).abs().max(1.0);
        if r.abs() <= 1e-12 * scale {
            break;
        }
        if r > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
    }

    let t = 1.0 / beta - 1.0 / alpha;
    let log_v_max = mf * ((alpha / beta).ln() + beta / alpha - 1.0) - 0.5 * nf * (1.0 - beta).ln();
    Ok(FeasibilityParams {
        alpha,
        beta,
        t,
        log_v_max,
    })
}

/// Congruence-normalizes an instance so the forms sum to the identity:
/// `Q_k ← S Q_k S` with `S = (Σ Q_k)^{-1/2}`. Errors when the sum is not
/// positive definite.
pub fn normalize_instance(inst: &Instance) -> Result<Instance, Error> {
    let n = inst.n();
    let mut total = SymMatrix::zeros(n);
    for q in inst.matrices() {
        total = total.add(q)?;
    }
    let (vals, vecs) = total.sym_eigen(1e-14);
    let max = vals.last().copied().unwrap_or(0.0);
    if max <= 0.0 || vals[0] <= 1e-12 * max {
        return Err(Error::Normalization(
            "sum of forms is not positive definite; cannot normalize".into(),
        ));
    }
    // S = V diag(λ^{-1/2}) Vᵀ
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for t in 0..n {
                acc += vecs[i * n + t] * vecs[j * n + t] / vals[t].sqrt();
            }
            s[i * n + j] = acc;
        }
    }
    let mats: Result<Vec<SymMatrix>, Error> = inst
        .matrices()
        .map(|q| {
            let sq = mul_dense(n, &s, q.entries());
            let sqs = mul_dense(n, &sq, &s);
            SymMatrix::from_rows(n, sqs)
        })
        .collect();
    build_instance(n, mats?)
}

fn mul_dense(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// How [`feasibility_report`] evaluates the integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeasBackend {
    /// Certified interpolation; requires the scaled instance to be
    /// admissible.
    Interp,
    /// Exact finite evaluation; tiny `m` only, but no admissibility needed.
    Oracle,
    /// Seeded Monte Carlo; no admissibility needed.
    Mc { samples: u64, seed: u64 },
}

impl FeasBackend {
    pub fn name(&self) -> &'static str {
        match self {
            FeasBackend::Interp => "interp",
            FeasBackend::Oracle => "oracle",
            FeasBackend::Mc { .. } => "mc",
        }
    }
}

/// The feasibility certificate for `q_k(x) = 1`, `k = 1..m`.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub m: usize,
    pub n: usize,
    pub params: FeasibilityParams,
    /// The integral of `∏(1 + α·q_k)` by the chosen backend.
    pub integral: f64,
    pub log_integral: f64,
    /// `integral / v_max`, computed in log space.
    pub score: f64,
    pub log_score: f64,
    pub backend: &'static str,
    pub estimate: Option<Estimate>,
    pub mc: Option<MCResult>,
    pub interpretation: &'static str,
}

const INTERPRETATION: &str = "score near 1 suggests abundant near-solutions; \
a much smaller score suggests the system is far from solvable (heuristic, \
no hard guarantee)";

/// Scores a normalized system of quadratic equations.
///
/// Preconditions: every form positive semidefinite and `Σ Q_k = I` to 1e−9
/// entrywise (equivalently `Σ q_k = ‖x‖²/2`); both are checked, not assumed.
/// Use [`normalize_instance`] to establish the sum condition first.
pub fn feasibility_report(
    inst: &Instance,
    alpha: f64,
    epsilon: f64,
    cfg: &ToleranceConfig,
    backend: FeasBackend,
) -> Result<FeasibilityReport, Error> {
    let m = inst.m();
    let n = inst.n();
    if m == 0 {
        return Err(Error::Invalid("feasibility scoring needs at least one form".into()));
    }

    for (k, form) in inst.forms().iter().enumerate() {
        let (vals, _) = form.matrix.sym_eigen(1e-12);
        let tol = 1e-9 * form.norm.max(1.0);
        if vals.first().copied().unwrap_or(0.0) < -tol {
            return Err(Error::Normalization(format!(
                "form {k} is not positive semidefinite (min eigenvalue {:.3e})",
                vals[0]
            )));
        }
    }

    let mut total = SymMatrix::zeros(n);
    for q in inst.matrices() {
        total = total.add(q)?;
    }
    let mut max_dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            max_dev = max_dev.max((total.get(i, j) - want).abs());
        }
    }
    if max_dev > 1e-9 {
        return Err(Error::Normalization(format!(
            "forms must sum to the identity; max entrywise deviation {max_dev:.3e}"
        )));
    }

    let scaled = build_instance(n, inst.matrices().map(|q| q.scale(alpha)).collect())?;
    let params = solve_beta(m, n, alpha)?;

    let (log_integral, integral, estimate, mc) = match backend {
        FeasBackend::Interp => {
            let est = interp::integrate_with(&scaled, cfg, epsilon, &ClusterOptions::default())?;
            (est.log_value, est.value, Some(est), None)
        }
        FeasBackend::Oracle => {
            let value = oracle::exact_value(&scaled, Complex64::new(1.0, 0.0))?.re;
            if value.is_nan() || value <= 0.0 {
                return Err(Error::Invalid(format!(
                    "exact integral is nonpositive ({value}); cannot take its log"
                )));
            }
            (value.ln(), value, None, None)
        }
        FeasBackend::Mc { samples, seed } => {
            let r = oracle::mc_estimate(&scaled, samples, seed);
            if r.mean.is_nan() || r.mean <= 0.0 {
                return Err(Error::Invalid(format!(
                    "Monte Carlo mean is nonpositive ({}); cannot take its log",
                    r.mean
                )));
            }
            (r.mean.ln(), r.mean, None, Some(r))
        }
    };

    let log_score = log_integral - params.log_v_max;
    Ok(FeasibilityReport {
        m,
        n,
        params,
        integral,
        log_integral,
        score: log_score.exp(),
        log_score,
        backend: backend.name(),
        estimate,
        mc,
        interpretation: INTERPRETATION,
    })
}
