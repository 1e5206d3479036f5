//! Dense symmetric matrices with explicit variable supports.
//!
//! Every product and trace is evaluated on the participating supports only:
//! a form touching `r` of the `n` variables costs `O(r)`-sized linear algebra
//! regardless of `n`. Operator norms come from a cyclic Jacobi sweep, which is
//! deterministic and immune to the sign-symmetric spectra that stall power
//! iteration.

use crate::Error;

/// Default relative tolerance for eigenvalue computations.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

const MAX_JACOBI_SWEEPS: usize = 64;

/// Symmetric `n × n` matrix together with its set of active variables.
///
/// `support` is exactly the sorted set of indices `i` with a nonzero entry in
/// row (equivalently column) `i`. Entries are stored dense, row-major, and
/// are bit-exactly symmetric after construction. Zero detection is exact:
/// callers are responsible for true sparsity, since thresholding would
/// silently change the interaction graph built on top of supports.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    entries: Vec<f64>,
    support: Vec<usize>,
}

impl SymMatrix {
    /// Builds from row-major entries, replacing `A` by `(A + Aᵀ)/2`.
    ///
    /// Returns the matrix and the largest correction `|a_ij − (a_ij+a_ji)/2|`
    /// applied anywhere, so callers can warn when the input was not symmetric
    /// to begin with.
    pub fn symmetrized(n: usize, mut entries: Vec<f64>) -> Result<(Self, f64), Error> {
        if entries.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {n}×{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        let mut max_correction = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let a = entries[i * n + j];
                let b = entries[j * n + i];
                let avg = 0.5 * (a + b);
                max_correction = max_correction.max((a - avg).abs()).max((b - avg).abs());
                entries[i * n + j] = avg;
                entries[j * n + i] = avg;
            }
        }
        let support = compute_support(n, &entries);
        Ok((
            SymMatrix {
                n,
                entries,
                support,
            },
            max_correction,
        ))
    }

    /// Builds from row-major entries, symmetrizing silently.
    pub fn from_rows(n: usize, entries: Vec<f64>) -> Result<Self, Error> {
        Self::symmetrized(n, entries).map(|(m, _)| m)
    }

    /// Builds from `(i, j, v)` triplets with `i ≤ j`; each triplet sets both
    /// `(i, j)` and `(j, i)`. Rejects non-finite values, out-of-range indices
    /// and duplicate positions.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, Error> {
        let mut entries = vec![0.0; n * n];
        let mut seen = std::collections::HashSet::new();
        for &(i, j, v) in triplets {
            if i > j {
                return Err(Error::Parse(format!("triplet ({i}, {j}) must have i ≤ j")));
            }
            if j >= n {
                return Err(Error::Parse(format!(
                    "triplet index ({i}, {j}) out of range for n = {n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Parse(format!("non-finite value at ({i}, {j})")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::Parse(format!("duplicate triplet position ({i}, {j})")));
            }
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
        let support = compute_support(n, &entries);
        Ok(SymMatrix {
            n,
            entries,
            support,
        })
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            entries: vec![0.0; n * n],
            support: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, a: f64) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = a;
        }
        let support = compute_support(n, &entries);
        SymMatrix {
            n,
            entries,
            support,
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut entries = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            entries[i * n + i] = d;
        }
        let support = compute_support(n, &entries);
        SymMatrix {
            n,
            entries,
            support,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Sorted indices of variables the matrix actually touches.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.support.iter().map(|&i| self.get(i, i)).sum()
    }

    /// Returns `a · self`. Support is recomputed: scaling can underflow an
    /// entry to exact zero.
    pub fn scale(&self, a: f64) -> SymMatrix {
        let entries: Vec<f64> = self.entries.iter().map(|&e| a * e).collect();
        let support = compute_support(self.n, &entries);
        SymMatrix {
            n: self.n,
            entries,
            support,
        }
    }

    pub fn add(&self, rhs: &SymMatrix) -> Result<SymMatrix, Error> {
        if self.n != rhs.n {
            return Err(Error::Dimension(format!(
                "cannot add a {}×{} matrix to a {}×{} matrix",
                self.n, self.n, rhs.n, rhs.n
            )));
        }
        let entries: Vec<f64> = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(&a, &b)| a + b)
            .collect();
        let support = compute_support(self.n, &entries);
        Ok(SymMatrix {
            n: self.n,
            entries,
            support,
        })
    }

    /// Evaluates the quadratic form `½⟨Qx, x⟩`.
    pub fn eval_form(&self, x: &[f64]) -> Result<f64, Error> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "form over {} variables evaluated at a vector of length {}",
                self.n,
                x.len()
            )));
        }
        let mut acc = 0.0;
        for &i in &self.support {
            let mut row = 0.0;
            for &j in &self.support {
                row += self.get(i, j) * x[j];
            }
            acc += x[i] * row;
        }
        Ok(0.5 * acc)
    }

    /// Operator norm `max_{‖x‖=1} ‖Qx‖ = max |eigenvalue|`, computed on the
    /// support-restricted block to relative accuracy `tol`.
    pub fn op_norm(&self, tol: f64) -> f64 {
        let k = self.support.len();
        if k == 0 {
            return 0.0;
        }
        let mut sub = vec![0.0; k * k];
        for (a, &i) in self.support.iter().enumerate() {
            for (b, &j) in self.support.iter().enumerate() {
                sub[a * k + b] = self.get(i, j);
            }
        }
        let diag = jacobi_eigenvalues(&mut sub, k, None, tol);
        diag.into_iter().fold(0.0f64, |m, d| m.max(d.abs()))
    }

    /// Full eigendecomposition `Q = V diag(λ) Vᵀ`.
    ///
    /// Returns eigenvalues sorted ascending and the matching eigenvectors as
    /// the columns of a row-major `n × n` matrix.
    pub fn sym_eigen(&self, tol: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut work = self.entries.clone();
        let mut vecs = vec![0.0; n * n];
        for i in 0..n {
            vecs[i * n + i] = 1.0;
        }
        let diag = jacobi_eigenvalues(&mut work, n, Some(&mut vecs), tol);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap().then(a.cmp(&b)));
        let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
        let mut sorted_vecs = vec![0.0; n * n];
        for (new_col, &old_col) in order.iter().enumerate() {
            for row in 0..n {
                sorted_vecs[row * n + new_col] = vecs[row * n + old_col];
            }
        }
        (values, sorted_vecs)
    }
}

fn compute_support(n: usize, entries: &[f64]) -> Vec<usize> {
    (0..n)
        .filter(|&i| (0..n).any(|j| entries[i * n + j] != 0.0))
        .collect()
}

/// Cyclic Jacobi diagonalization. `a` is a dense `k × k` symmetric matrix,
/// destroyed in place; `vecs`, when given, accumulates the rotations so its
/// columns end up as eigenvectors. Returns the diagonal.
fn jacobi_eigenvalues(a: &mut [f64], k: usize, mut vecs: Option<&mut [f64]>, tol: f64) -> Vec<f64> {
    let scale = frobenius(a);
    if scale == 0.0 || k < 2 {
        return (0..k).map(|i| a[i * k + i]).collect();
    }
    for _ in 0..MAX_JACOBI_SWEEPS {
        if off_diagonal_norm(a, k) <= tol * scale {
            break;
        }
        for p in 0..k - 1 {
            for q in p + 1..k {
                let apq = a[p * k + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * k + q] - a[p * k + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * k + p] -= t * apq;
                a[q * k + q] += t * apq;
                a[p * k + q] = 0.0;
                a[q * k + p] = 0.0;
                for i in 0..k {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[i * k + p];
                    let aiq = a[i * k + q];
                    let new_ip = aip - s * (aiq + tau * aip);
                    let new_iq = aiq + s * (aip - tau * aiq);
                    a[i * k + p] = new_ip;
                    a[p * k + i] = new_ip;
                    a[i * k + q] = new_iq;
                    a[q * k + i] = new_iq;
                }
                if let Some(v) = vecs.as_deref_mut() {
                    for i in 0..k {
                        let vip = v[i * k + p];
                        let viq = v[i * k + q];
                        v[i * k + p] = vip - s * (viq + tau * vip);
                        v[i * k + q] = viq + s * (vip - tau * viq);
                    }
                }
            }
        }
    }
    (0..k).map(|i| a[i * k + i]).collect()
}

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|&x| x * x).sum::<f64>().sqrt()
}

fn off_diagonal_norm(a: &[f64], k: usize) -> f64 {
    let mut acc = 0.0;
    for p in 0..k {
        for q in p + 1..k {
            acc += 2.0 * a[p * k + q] * a[p * k + q];
        }
    }
    acc.sqrt()
}

/// Running product `Q_{k₁} Q_{k₂} ⋯` restricted to the rows of the first
/// factor's support and the columns of the last factor's support; everything
/// outside that block is identically zero.
///
/// `push`/`pop` form a stack, so depth-first walk enumerations reuse prefix
/// products. Internal buffers are recycled across pushes.
pub struct ProductChain {
    n: usize,
    rows: Vec<usize>,
    levels: Vec<ChainLevel>,
    depth: usize,
}

#[derive(Default)]
struct ChainLevel {
    cols: Vec<usize>,
    data: Vec<f64>, // rows.len() × cols.len(), row-major
}

impl ProductChain {
    pub fn new(first: &SymMatrix) -> Self {
        let rows: Vec<usize> = first.support().to_vec();
        let cols = rows.clone();
        let mut data = vec![0.0; rows.len() * cols.len()];
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                data[a * cols.len() + b] = first.get(i, j);
            }
        }
        ProductChain {
            n: first.n(),
            rows,
            levels: vec![ChainLevel { cols, data }],
            depth: 1,
        }
    }

    /// Number of matrices currently multiplied together.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Appends a factor on the right.
    pub fn push(&mut self, q: &SymMatrix) -> Result<(), Error> {
        if q.n() != self.n {
            return Err(Error::Dimension(format!(
                "product of a {0}×{0} chain with a {1}×{1} matrix",
                self.n,
                q.n()
            )));
        }
        if self.levels.len() == self.depth {
            self.levels.push(ChainLevel::default());
        }
        let (head, tail) = self.levels.split_at_mut(self.depth);
        let prev = &head[self.depth - 1];
        let dst = &mut tail[0];

        dst.cols.clear();
        dst.cols.extend_from_slice(q.support());
        let width = dst.cols.len();
        dst.data.clear();
        dst.data.resize(self.rows.len() * width, 0.0);
        let prev_width = prev.cols.len();
        for r in 0..self.rows.len() {
            for (b, &j) in dst.cols.iter().enumerate() {
                let mut acc = 0.0;
                for (t, &mid) in prev.cols.iter().enumerate() {
                    acc += prev.data[r * prev_width + t] * q.get(mid, j);
                }
                dst.data[r * width + b] = acc;
            }
        }
        self.depth += 1;
        Ok(())
    }

    /// Drops the most recent factor. The chain always keeps its first factor.
    pub fn pop(&mut self) {
        assert!(self.depth > 1, "cannot pop the first factor");
        self.depth -= 1;
    }

    /// Trace of the current product.
    pub fn trace(&self) -> f64 {
        let level = &self.levels[self.depth - 1];
        let width = level.cols.len();
        let mut acc = 0.0;
        for (a, &r) in self.rows.iter().enumerate() {
            if let Ok(b) = level.cols.binary_search(&r) {
                acc += level.data[a * width + b];
            }
        }
        acc
    }
}

/// `trace(Q_{k₁} Q_{k₂} ⋯ Q_{k_s})`, evaluated on the union of the supports
/// only. Traces over matrices with cyclically disjoint supports vanish; the
/// restriction never changes the value.
pub fn trace_product(tuple: &[&SymMatrix]) -> Result<f64, Error> {
    let first = tuple
        .first()
        .ok_or_else(|| Error::Invalid("trace_product needs a nonempty tuple".into()))?;
    let mut chain = ProductChain::new(first);
    for q in &tuple[1..] {
        chain.push(q)?;
    }
    Ok(chain.trace())
}
