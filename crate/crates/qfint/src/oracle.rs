//! Ground-truth engines for desk-scale verification.
//!
//! * [`exact_moment`]: the exact Gaussian mean `E ∏_{k∈S} q_k` by square-free
//!   coefficient extraction from the `det^{-1/2}` generating function — a sum
//!   over set partitions of `S`, each block summed over its ordered
//!   arrangements with weight `trace(Q_{k₁}⋯Q_{k_b})/(2b)`.
//! * [`exact_value`]: `p(ω) = Σ_S ω^{|S|}·E ∏_{k∈S} q_k` for tiny `m`, valid
//!   at any complex `ω`.
//! * [`mc_estimate`]: seeded, counter-addressed Monte Carlo; bit-reproducible
//!   and schedule-independent.
//! * [`zero_scan`]: minimum of `|p(ω)|` over a polar grid, a falsification
//!   harness for the zero-free disk.
//!
//! The arrangement sums share matrix kernels with the main path only at the
//! `symmat` layer; the enumeration logic here is independent of `cluster`.

use crate::model::Instance;
use crate::symmat::ProductChain;
use crate::Error;
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Largest subset size accepted by [`exact_moment`]. Work grows like the
/// number of sequences of distinct indices (~10⁷ at 10), which is still
/// seconds; beyond that the factorial growth is hopeless.
pub const MOMENT_GUARD: usize = 10;

/// Largest `m` accepted by [`exact_value`], [`moment_vector`] and
/// [`zero_scan`] (these aggregate over all `2^m` subsets).
pub const VALUE_GUARD: usize = 6;

/// Per-block weights `W(B) = Σ_arrangements trace(⋯)/(2|B|)` for every
/// nonempty `B` of the selected forms, indexed by bitmask over positions in
/// `sel`. One depth-first pass over sequences of distinct indices shares all
/// prefix products.
fn block_weights(inst: &Instance, sel: &[usize]) -> Vec<f64> {
    let s = sel.len();
    let mut w = vec![0.0; 1usize << s];
    for a in 0..s {
        let mut chain = ProductChain::new(inst.matrix(sel[a]));
        sequence_rec(inst, sel, 1u32 << a, 1, &mut chain, &mut w);
    }
    w
}

fn sequence_rec(
    inst: &Instance,
    sel: &[usize],
    mask: u32,
    len: usize,
    chain: &mut ProductChain,
    w: &mut [f64],
) {
    w[mask as usize] += chain.trace() / (2.0 * len as f64);
    for (b, &form) in sel.iter().enumerate() {
        if mask & (1 << b) != 0 {
            continue;
        }
        chain.push(inst.matrix(form)).expect("instance forms share n");
        sequence_rec(inst, sel, mask | (1 << b), len + 1, chain, w);
        chain.pop();
    }
}

/// Sum over set partitions of each subset: `F(T) = Σ_{B ∋ min T} W(B)·F(T∖B)`.
fn partition_sums(w: &[f64]) -> Vec<f64> {
    let size = w.len();
    let mut f = vec![0.0; size];
    f[0] = 1.0;
    for mask in 1..size {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut acc = 0.0;
        let mut sub = rest;
        loop {
            let block = sub | low;
            acc += w[block] * f[mask ^ block];
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        f[mask] = acc;
    }
    f
}

/// Exact mixed moment `E ∏_{k∈S} q_k` under the standard Gaussian.
pub fn exact_moment(inst: &Instance, subset: &[usize]) -> Result<f64, Error> {
    if subset.len() > MOMENT_GUARD {
        return Err(Error::Guard(format!(
            "exact_moment enumerates set partitions; |S| = {} exceeds {MOMENT_GUARD}",
            subset.len()
        )));
    }
    let mut seen = vec![false; inst.m()];
    for &k in subset {
        if k >= inst.m() {
            return Err(Error::Invalid(format!("form index {k} out of range")));
        }
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::Invalid(format!("duplicate form index {k} in subset")));
        }
    }
    if subset.is_empty() {
        return Ok(1.0);
    }
    let w = block_weights(inst, subset);
    let f = partition_sums(&w);
    Ok(f[w.len() - 1])
}

/// Aggregated moments `μ_s = Σ_{|S|=s} E ∏_{k∈S} q_k` for `s = 0..m`, i.e.
/// the coefficients of `p(z)` computed by a route independent of the cluster
/// enumeration.
pub fn moment_vector(inst: &Instance) -> Result<Vec<f64>, Error> {
    let m = inst.m();
    if m > VALUE_GUARD {
        return Err(Error::Guard(format!(
            "exact evaluation aggregates all 2^m subsets; m = {m} exceeds {VALUE_GUARD}"
        )));
    }
    let sel: Vec<usize> = (0..m).collect();
    let w = block_weights(inst, &sel);
    let f = partition_sums(&w);
    let mut mu = vec![0.0; m + 1];
    for (mask, &val) in f.iter().enumerate() {
        mu[mask.count_ones() as usize] += val;
    }
    Ok(mu)
}

/// `p(ω)` as a finite sum; accepts any complex `ω`. Guarded by
/// [`VALUE_GUARD`].
pub fn exact_value(inst: &Instance, omega: Complex64) -> Result<Complex64, Error> {
    let mu = moment_vector(inst)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for &m in mu.iter().rev() {
        acc = acc * omega + m;
    }
    Ok(acc)
}

/// Result of a [`zero_scan`].
#[derive(Debug, Clone, Copy)]
pub struct ZeroScan {
    pub min_modulus: f64,
    pub argmin: Complex64,
    pub radius: f64,
    pub grid: usize,
}

/// Minimum of `|p(ω)|` over the closed disk `|ω| ≤ radius`, sampled on the
/// polar grid `ω = radius·(i/grid)·e^{2πi·j/grid}` plus the center.
///
/// The scan falsifies, it does not prove: a positive minimum is evidence of
/// zero-freeness, a near-zero minimum localizes a root.
pub fn zero_scan(inst: &Instance, radius: f64, grid: usize) -> Result<ZeroScan, Error> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::Invalid(format!("scan radius must be positive, got {radius}")));
    }
    if grid == 0 {
        return Err(Error::Invalid("scan grid must be positive".into()));
    }
    let mu = moment_vector(inst)?;
    let eval = |omega: Complex64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &m in mu.iter().rev() {
            acc = acc * omega + m;
        }
        acc
    };
    let mut min_modulus = f64::INFINITY;
    let mut argmin = Complex64::new(0.0, 0.0);
    let mut consider = |omega: Complex64, modulus: f64| {
        if modulus < min_modulus {
            min_modulus = modulus;
            argmin = omega;
        }
    };
    let center = Complex64::new(0.0, 0.0);
    consider(center, eval(center).norm());
    for i in 1..=grid {
        let r = radius * i as f64 / grid as f64;
        for j in 0..grid {
            let theta = std::f64::consts::TAU * j as f64 / grid as f64;
            let omega = Complex64::from_polar(r, theta);
            consider(omega, eval(omega).norm());
        }
    }
    Ok(ZeroScan {
        min_modulus,
        argmin,
        radius,
        grid,
    })
}

/// What [`mc_estimate_with`] averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McTarget {
    /// `∏ₖ (1 + q_k(x))` — the integrand of `p(1)`.
    OnePlusForms,
    /// `∏ₖ q_k(x)` — bare product moments (Selberg-style references).
    ProductOnly,
}

/// A seeded Monte Carlo average with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCResult {
    pub mean: f64,
    /// Sample standard deviation divided by √samples.
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Monte Carlo estimate of `p(1)` with the `OnePlusForms` target.
pub fn mc_estimate(inst: &Instance, samples: u64, seed: u64) -> MCResult {
    mc_estimate_with(inst, samples, seed, McTarget::OnePlusForms)
}

/// Draws standard Gaussian vectors from a counter-addressed generator: each
/// sample index gets its own ChaCha8 stream derived from the seed, and pairs
/// of uniforms feed a rejection-free Box–Muller transform. Batches are
/// combined in a fixed order, so the result is identical for any thread
/// count.
pub fn mc_estimate_with(inst: &Instance, samples: u64, seed: u64, target: McTarget) -> MCResult {
    assert!(samples >= 2, "need at least 2 samples for a standard error");
    const BATCH: u64 = 1 << 16;
    let batches = samples.div_ceil(BATCH);
    let partials: Vec<(u64, f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * BATCH;
            let hi = samples.min(lo + BATCH);
            let mut x = vec![0.0; inst.n()];
            let (mut count, mut mean, mut m2) = (0u64, 0.0f64, 0.0f64);
            for idx in lo..hi {
                gaussian_fill(seed, idx, &mut x);
                let v = evaluate_target(inst, &x, target);
                count += 1;
                let delta = v - mean;
                mean += delta / count as f64;
                m2 += delta * (v - mean);
            }
            (count, mean, m2)
        })
        .collect();

    let (mut count, mut mean, mut m2) = (0u64, 0.0f64, 0.0f64);
    for (c, batch_mean, batch_m2) in partials {
        if c == 0 {
            continue;
        }
        let delta = batch_mean - mean;
        let total = count + c;
        mean += delta * (c as f64 / total as f64);
        m2 += batch_m2 + delta * delta * (count as f64) * (c as f64) / total as f64;
        count = total;
    }
    let variance = if count > 1 {
        m2 / (count as f64 - 1.0)
    } else {
        0.0
    };
    MCResult {
        mean,
        stderr: (variance / count as f64).sqrt(),
        samples: count,
        seed,
    }
}

fn evaluate_target(inst: &Instance, x: &[f64], target: McTarget) -> f64 {
    let mut prod = 1.0;
    for form in inst.forms() {
        let q = form.matrix.eval_form(x).expect("sample has length n");
        prod *= match target {
            McTarget::OnePlusForms => 1.0 + q,
            McTarget::ProductOnly => q,
        };
    }
    prod
}

/// Fills `out` with standard Gaussians for one sample index.
pub(crate) fn gaussian_fill(seed: u64, sample: u64, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    let mut i = 0;
    while i < out.len() {
        let u1 = unit_open(rng.next_u64());
        let u2 = unit_open(rng.next_u64());
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        out[i] = r * theta.cos();
        i += 1;
        if i < out.len() {
            out[i] = r * theta.sin();
            i += 1;
        }
    }
}

/// Maps 64 random bits to (0, 1]; never 0, so `ln` is safe.
fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 1.0) * (1.0 / 9007199254740992.0)
}
