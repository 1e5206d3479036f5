//! Problem instances: the forms, their interaction graph, locality
//! parameters, and the admissibility check that guarantees a zero-free disk.
//!
//! Two hypotheses are supported. The *uniform* bound requires
//! `½‖Q_k‖ ≤ γ′/max{m, n}` for every form; the *local* bound requires
//! `½‖Q_k‖ ≤ γ′/r`, where `r` bounds both the number of variables per form
//! and the number of other forms sharing a variable with it. Either way the
//! perturbation polynomial `p(z)` is nonzero on the closed disk of radius
//! `β = γ/γ′ > 1`, which is what the interpolation step needs.

use crate::symmat::{SymMatrix, DEFAULT_EIG_TOL};
use crate::Error;

/// The zero-free-radius constant `γ = ¼·e^{-1/2} ≈ 0.1516326649`.
pub fn gamma() -> f64 {
    0.25 * (-0.5f64).exp()
}

/// Which admissibility hypothesis to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `½‖Q_k‖ ≤ γ′/r` with `r` the locality parameter.
    Local,
    /// `½‖Q_k‖ ≤ γ′/max{m, n}`.
    Uniform,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Local => "local",
            Mode::Uniform => "uniform",
        }
    }
}

/// A user-chosen constant `0 < γ′ < γ` plus the hypothesis mode.
///
/// Smaller `γ′` admits fewer instances but widens the interpolation disk
/// ratio `β = γ/γ′`, shrinking the truncation order. The default `γ′ = 0.05`
/// gives `β ≈ 3.03`.
#[derive(Debug, Clone, Copy)]
pub struct ToleranceConfig {
    pub gamma_prime: f64,
    pub mode: Mode,
}

impl ToleranceConfig {
    pub fn new(gamma_prime: f64, mode: Mode) -> Result<Self, Error> {
        if !(gamma_prime > 0.0 && gamma_prime < gamma()) {
            return Err(Error::Invalid(format!(
                "gamma_prime must lie in (0, {:.10}), got {gamma_prime}",
                gamma()
            )));
        }
        Ok(ToleranceConfig { gamma_prime, mode })
    }

    pub fn local(gamma_prime: f64) -> Result<Self, Error> {
        Self::new(gamma_prime, Mode::Local)
    }

    pub fn uniform(gamma_prime: f64) -> Result<Self, Error> {
        Self::new(gamma_prime, Mode::Uniform)
    }

    /// Interpolation disk ratio `β = γ/γ′`.
    pub fn beta(&self) -> f64 {
        gamma() / self.gamma_prime
    }
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            gamma_prime: 0.05,
            mode: Mode::Local,
        }
    }
}

/// One quadratic form: its matrix plus the cached operator norm.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub matrix: SymMatrix,
    pub norm: f64,
}

/// An ordered list of `m` forms over `n` variables together with their
/// interaction graph: forms `k ≠ j` are adjacent iff their supports
/// intersect. Immutable after construction; all queries are read-only.
#[derive(Debug, Clone)]
pub struct Instance {
    n: usize,
    forms: Vec<QuadraticForm>,
    interaction: Vec<Vec<usize>>,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of forms.
    pub fn m(&self) -> usize {
        self.forms.len()
    }

    pub fn form(&self, k: usize) -> &QuadraticForm {
        &self.forms[k]
    }

    pub fn forms(&self) -> &[QuadraticForm] {
        &self.forms
    }

    pub fn matrix(&self, k: usize) -> &SymMatrix {
        &self.forms[k].matrix
    }

    /// Sorted indices of forms sharing a variable with form `k`.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.interaction[k]
    }

    pub fn matrices(&self) -> impl Iterator<Item = &SymMatrix> {
        self.forms.iter().map(|f| &f.matrix)
    }
}

/// Builds an [`Instance`], caching operator norms and the interaction graph.
pub fn build_instance(n: usize, matrices: Vec<SymMatrix>) -> Result<Instance, Error> {
    if n == 0 {
        return Err(Error::Invalid("ambient dimension n must be positive".into()));
    }
    for (k, m) in matrices.iter().enumerate() {
        if m.n() != n {
            return Err(Error::Dimension(format!(
                "form {k} is {0}×{0} but the instance has n = {n}",
                m.n()
            )));
        }
    }
    let m = matrices.len();
    let mut interaction = vec![Vec::new(); m];
    for k in 0..m {
        for j in (k + 1)..m {
            if supports_intersect(matrices[k].support(), matrices[j].support()) {
                interaction[k].push(j);
                interaction[j].push(k);
            }
        }
    }
    // Neighbor lists come out sorted because j runs upward, but make the
    // invariant explicit.
    for adj in &mut interaction {
        adj.sort_unstable();
    }
    let forms = matrices
        .into_iter()
        .map(|matrix| {
            let norm = matrix.op_norm(DEFAULT_EIG_TOL);
            QuadraticForm { matrix, norm }
        })
        .collect();
    Ok(Instance {
        n,
        forms,
        interaction,
    })
}

fn supports_intersect(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Locality parameters of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalityParams {
    /// Max number of variables any single form depends on.
    pub r_dep: usize,
    /// Max number of other forms any form shares a variable with.
    pub r_int: usize,
    /// `max(r_dep, r_int)`: the tightest value serving both roles.
    pub r: usize,
}

pub fn locality_params(inst: &Instance) -> LocalityParams {
    let r_dep = inst
        .forms()
        .iter()
        .map(|f| f.matrix.support().len())
        .max()
        .unwrap_or(0);
    let r_int = (0..inst.m())
        .map(|k| inst.neighbors(k).len())
        .max()
        .unwrap_or(0);
    LocalityParams {
        r_dep,
        r_int,
        r: r_dep.max(r_int),
    }
}

/// Outcome of [`check_admissible`]. Failure is a report state, not an error;
/// the margins say how far each form is from the bound.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub mode: Mode,
    pub gamma_prime: f64,
    pub locality: LocalityParams,
    /// The divisor actually used: `r` in local mode, `max(m, n)` in uniform.
    pub divisor: usize,
    /// Per-form bound `γ′ / divisor` on `½‖Q_k‖`.
    pub bound: f64,
    /// `bound − ½‖Q_k‖` per form; negative means the form fails.
    pub margins: Vec<f64>,
    pub pass: bool,
    /// Interpolation disk ratio `β = γ/γ′` (> 1 whenever `γ′ < γ`).
    pub beta: f64,
}

impl AdmissibilityReport {
    pub fn failing(&self) -> usize {
        self.margins.iter().filter(|&&m| m < 0.0).count()
    }
}

/// Checks every form against its norm bound. Never mutates or rescales the
/// instance, so reported margins are auditable against the input.
pub fn check_admissible(inst: &Instance, cfg: &ToleranceConfig) -> AdmissibilityReport {
    let locality = locality_params(inst);
    let divisor = match cfg.mode {
        // An all-zero instance has r = 0; any positive divisor accepts it.
        Mode::Local => locality.r.max(1),
        Mode::Uniform => inst.m().max(inst.n()).max(1),
    };
    let bound = cfg.gamma_prime / divisor as f64;
    let margins: Vec<f64> = inst.forms().iter().map(|f| bound - 0.5 * f.norm).collect();
    let pass = margins.iter().all(|&m| m >= 0.0);
    AdmissibilityReport {
        mode: cfg.mode,
        gamma_prime: cfg.gamma_prime,
        locality,
        divisor,
        bound,
        margins,
        pass,
        beta: cfg.beta(),
    }
}
