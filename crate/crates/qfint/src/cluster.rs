//! Taylor coefficients of the perturbation polynomial
//! `p(z) = (2π)^{-n/2} ∫ ∏ₖ(1 + z·q_k(x)) e^{-‖x‖²/2} dx`.
//!
//! `c_s` is a sum over unordered collections of pairwise index-disjoint
//! ordered tuples of distinct form indices with total length `s`; each tuple
//! `(k₁, …, k_b)` contributes `trace(Q_{k₁}⋯Q_{k_b})/(2b)`. Only closed walks
//! in the interaction graph can carry a nonzero trace, so enumeration runs on
//! the graph. Tuples are consolidated per rotation class (every class of a
//! tuple of distinct indices has exactly `b` members, and traces are
//! cyclically invariant), so the canonical representative — the rotation
//! starting at the smallest index — is enumerated once with weight
//! `½·trace` instead of `b` times with weight `trace/(2b)`.
//!
//! Enumeration is partitioned by the collection's lead tuple. Partitions are
//! evaluated independently (possibly in parallel) and their compensated
//! subtotals are combined in partition order, so the result does not depend
//! on the parallel schedule.

use crate::model::Instance;
use crate::symmat::ProductChain;
use crate::Error;
use rayon::prelude::*;

/// One ordered tuple of distinct form indices and its weight
/// `trace(Q_{k₁}⋯Q_{k_s})/(2s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTerm {
    pub tuple: Vec<usize>,
    /// Tuple length (its level in the expansion).
    pub level: usize,
    pub weight: f64,
}

/// Coefficients `c_0 .. c_{k_max}` of `p(z)`, with `c_0 = 1` and `c_s = 0`
/// for every `s > m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub c: Vec<f64>,
}

impl CoeffVector {
    pub fn k_max(&self) -> usize {
        self.c.len() - 1
    }
}

/// Knobs for [`coeff_vector_with`].
#[derive(Debug, Clone, Copy)]
pub struct ClusterOptions {
    /// Hard cap on enumerated collections; exceeding it is a reported
    /// failure, not a silent stall.
    pub max_collections: u64,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            max_collections: 100_000_000,
        }
    }
}

/// Work counters for one [`coeff_vector_with`] run.
#[derive(Debug, Clone, Default)]
pub struct EnumStats {
    /// Canonical tuples with a nonzero weight, by level (index = level).
    pub tuples: u64,
    /// Enumerated collections by total length (index = total length).
    pub collections_per_level: Vec<u64>,
    pub total_collections: u64,
    /// Largest leftover compensation relative to the coefficient magnitude;
    /// a heuristic roundoff indicator, not part of any certificate.
    pub comp_residual: f64,
}

#[derive(Debug, Clone)]
pub struct CoeffOutput {
    pub coeffs: CoeffVector,
    pub stats: EnumStats,
}

/// Neumaier compensated accumulator: collections can number millions with
/// mixed signs.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub(crate) fn residual(&self) -> f64 {
        self.comp
    }
}

/// Small dynamic bitset over form indices.
#[derive(Debug, Clone, PartialEq, Eq)]
struct IndexMask {
    words: Vec<u64>,
}

impl IndexMask {
    fn empty(m: usize) -> Self {
        IndexMask {
            words: vec![0; m.div_ceil(64)],
        }
    }

    fn from_indices(m: usize, indices: &[usize]) -> Self {
        let mut mask = Self::empty(m);
        for &i in indices {
            mask.words[i / 64] |= 1 << (i % 64);
        }
        mask
    }

    fn intersects(&self, other: &IndexMask) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .any(|(a, b)| a & b != 0)
    }

    fn or_assign(&mut self, other: &IndexMask) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    fn andnot_assign(&mut self, other: &IndexMask) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }
}

/// Canonical rotation-class representative: first index is the tuple's
/// minimum, weight is `½·trace` (the whole class consolidated).
#[derive(Debug, Clone)]
struct CanonTuple {
    first: usize,
    len: usize,
    mask: IndexMask,
    half_trace: f64,
}

/// Every ordered tuple of `s` distinct indices whose weight can be nonzero:
/// each cyclically consecutive pair, including the wrap-around, must be an
/// interaction edge. Tuples pruned by that rule have trace exactly zero.
pub fn enumerate_tuples(inst: &Instance, s: usize) -> Vec<ClusterTerm> {
    let m = inst.m();
    let mut out = Vec::new();
    if s == 0 || s > m {
        return out;
    }
    if s == 1 {
        for k in 0..m {
            out.push(ClusterTerm {
                tuple: vec![k],
                level: 1,
                weight: 0.5 * inst.matrix(k).trace(),
            });
        }
        return out;
    }
    let mut used = vec![false; m];
    for start in 0..m {
        let mut chain = ProductChain::new(inst.matrix(start));
        used[start] = true;
        let mut path = vec![start];
        tuple_rec(inst, s, &mut chain, &mut used, &mut path, &mut out);
        used[start] = false;
    }
    out
}

fn tuple_rec(
    inst: &Instance,
    s: usize,
    chain: &mut ProductChain,
    used: &mut [bool],
    path: &mut Vec<usize>,
    out: &mut Vec<ClusterTerm>,
) {
    let last = *path.last().unwrap();
    if path.len() == s {
        // closed-walk condition: the wrap-around pair must also be an edge
        if inst.neighbors(last).binary_search(&path[0]).is_ok() {
            out.push(ClusterTerm {
                tuple: path.clone(),
                level: s,
                weight: chain.trace() / (2.0 * s as f64),
            });
        }
        return;
    }
    for &u in inst.neighbors(last) {
        if used[u] {
            continue;
        }
        used[u] = true;
        path.push(u);
        chain.push(inst.matrix(u)).expect("instance forms share n");
        tuple_rec(inst, s, chain, used, path, out);
        chain.pop();
        path.pop();
        used[u] = false;
    }
}

fn canonical_tuples(inst: &Instance, max_len: usize) -> (Vec<CanonTuple>, Vec<std::ops::Range<usize>>) {
    let m = inst.m();
    let mut flat = Vec::new();
    let mut by_first = Vec::with_capacity(m);
    let mut used = vec![false; m];
    for start in 0..m {
        let group_start = flat.len();
        let mut group = Vec::new();
        let mut chain = ProductChain::new(inst.matrix(start));
        used[start] = true;
        let mut path = vec![start];
        canon_rec(inst, start, max_len, &mut chain, &mut used, &mut path, &mut group);
        used[start] = false;
        // ascending length lets the collection search cut off early
        group.sort_by_key(|t| t.len);
        flat.extend(group);
        by_first.push(group_start..flat.len());
    }
    (flat, by_first)
}

fn canon_rec(
    inst: &Instance,
    start: usize,
    max_len: usize,
    chain: &mut ProductChain,
    used: &mut [bool],
    path: &mut Vec<usize>,
    out: &mut Vec<CanonTuple>,
) {
    let last = *path.last().unwrap();
    let closed = path.len() == 1 || inst.neighbors(last).binary_search(&start).is_ok();
    if closed {
        let half_trace = 0.5 * chain.trace();
        if half_trace != 0.0 {
            out.push(CanonTuple {
                first: start,
                len: path.len(),
                mask: IndexMask::from_indices(inst.m(), path),
                half_trace,
            });
        }
    }
    if path.len() == max_len {
        return;
    }
    for &u in inst.neighbors(last) {
        if u <= start || used[u] {
            continue;
        }
        used[u] = true;
        path.push(u);
        chain.push(inst.matrix(u)).expect("instance forms share n");
        canon_rec(inst, start, max_len, chain, used, path, out);
        chain.pop();
        path.pop();
        used[u] = false;
    }
}

struct Ctx<'a> {
    tuples: &'a [CanonTuple],
    by_first: &'a [std::ops::Range<usize>],
    m: usize,
    k_eff: usize,
    cap: u64,
    /// Collections enumerated so far across all partitions; the kill switch.
    counter: std::sync::atomic::AtomicU64,
}

/// Partitions publish their counts in batches: the shared counter stays off
/// the hot path, and whether the cap is exceeded still depends only on the
/// true total, never on scheduling.
const BUDGET_FLUSH: u64 = 4096;

struct PartOut {
    sums: Vec<Kahan>,
    counts: Vec<u64>,
    pending: u64,
    killed: bool,
}

impl PartOut {
    fn flush(&mut self, ctx: &Ctx<'_>) {
        use std::sync::atomic::Ordering;
        let after = ctx.counter.fetch_add(self.pending, Ordering::Relaxed) + self.pending;
        self.pending = 0;
        if after > ctx.cap {
            self.killed = true;
        }
    }

    /// Registers one collection; false once the budget is exhausted.
    fn tick(&mut self, ctx: &Ctx<'_>) -> bool {
        self.pending += 1;
        if self.pending >= BUDGET_FLUSH {
            self.flush(ctx);
        }
        !self.killed
    }
}

fn run_partition(ctx: &Ctx<'_>, root: &CanonTuple) -> PartOut {
    let mut out = PartOut {
        sums: vec![Kahan::default(); ctx.k_eff + 1],
        counts: vec![0; ctx.k_eff + 1],
        pending: 0,
        killed: false,
    };
    // the counter only passes the cap on runs that are doomed anyway
    if ctx.counter.load(std::sync::atomic::Ordering::Relaxed) > ctx.cap {
        out.killed = true;
        return out;
    }
    out.counts[root.len] += 1;
    out.sums[root.len].add(root.half_trace);
    if out.tick(ctx) {
        let mut used = root.mask.clone();
        collect_rec(
            ctx,
            &mut used,
            root.len,
            root.half_trace,
            root.first + 1,
            &mut out,
        );
    }
    out.flush(ctx);
    out
}

fn collect_rec(
    ctx: &Ctx<'_>,
    used: &mut IndexMask,
    total_len: usize,
    prod: f64,
    min_first: usize,
    out: &mut PartOut,
) -> bool {
    for f in min_first..ctx.m {
        for ti in ctx.by_first[f].clone() {
            let t = &ctx.tuples[ti];
            if total_len + t.len > ctx.k_eff {
                break; // lengths ascend within a first-index group
            }
            if t.mask.intersects(used) {
                continue;
            }
            let level = total_len + t.len;
            out.counts[level] += 1;
            let p = prod * t.half_trace;
            out.sums[level].add(p);
            if !out.tick(ctx) {
                return false;
            }
            used.or_assign(&t.mask);
            let keep = collect_rec(ctx, used, level, p, f + 1, out);
            used.andnot_assign(&t.mask);
            if !keep {
                return false;
            }
        }
    }
    true
}

/// On budget failure, a weightless sequential recount pins down the level of
/// the first collection past the cap in canonical enumeration order, so the
/// reported error does not depend on how the parallel phase was scheduled.
fn crossing_level(ctx: &Ctx<'_>) -> usize {
    let mut counter = 0u64;
    let mut used = IndexMask::empty(ctx.m);
    for root in ctx.tuples {
        counter += 1;
        if counter > ctx.cap {
            return root.len;
        }
        used.or_assign(&root.mask);
        if let Some(level) = crossing_rec(ctx, &mut used, root.len, root.first + 1, &mut counter) {
            return level;
        }
        used.andnot_assign(&root.mask);
    }
    unreachable!("crossing_level is only called when the total exceeds the cap");
}

fn crossing_rec(
    ctx: &Ctx<'_>,
    used: &mut IndexMask,
    total_len: usize,
    min_first: usize,
    counter: &mut u64,
) -> Option<usize> {
    for f in min_first..ctx.m {
        for ti in ctx.by_first[f].clone() {
            let t = &ctx.tuples[ti];
            if total_len + t.len > ctx.k_eff {
                break;
            }
            if t.mask.intersects(used) {
                continue;
            }
            *counter += 1;
            if *counter > ctx.cap {
                return Some(total_len + t.len);
            }
            used.or_assign(&t.mask);
            let crossed = crossing_rec(ctx, used, total_len + t.len, f + 1, counter);
            used.andnot_assign(&t.mask);
            if crossed.is_some() {
                return crossed;
            }
        }
    }
    None
}

/// The coefficient of `z^s` in `p(z)`; `c_0 = 1` and `c_s = 0` for `s > m`.
pub fn taylor_coeff(inst: &Instance, s: usize) -> Result<f64, Error> {
    if s > inst.m() {
        return Ok(0.0);
    }
    Ok(coeff_vector(inst, s)?.c[s])
}

/// `c_0 .. c_{k_max}` with the default enumeration budget.
pub fn coeff_vector(inst: &Instance, k_max: usize) -> Result<CoeffVector, Error> {
    coeff_vector_with(inst, k_max, &ClusterOptions::default()).map(|o| o.coeffs)
}

/// `c_0 .. c_{k_max}` plus work counters.
///
/// Trace products share prefixes through the walk stack; each unordered
/// collection is generated exactly once, with its lead tuples in increasing
/// first-index order. Output is deterministic for a fixed instance regardless
/// of how many worker threads the surrounding rayon pool has.
pub fn coeff_vector_with(
    inst: &Instance,
    k_max: usize,
    opts: &ClusterOptions,
) -> Result<CoeffOutput, Error> {
    let m = inst.m();
    let k_eff = k_max.min(m);
    let mut c = vec![0.0; k_max + 1];
    c[0] = 1.0;
    let mut stats = EnumStats {
        collections_per_level: vec![0; k_eff + 1],
        ..EnumStats::default()
    };
    if k_eff == 0 {
        return Ok(CoeffOutput {
            coeffs: CoeffVector { c },
            stats,
        });
    }

    let (tuples, by_first) = canonical_tuples(inst, k_eff);
    stats.tuples = tuples.len() as u64;
    let ctx = Ctx {
        tuples: &tuples,
        by_first: &by_first,
        m,
        k_eff,
        cap: opts.max_collections,
        counter: std::sync::atomic::AtomicU64::new(0),
    };

    let parts: Vec<PartOut> = tuples
        .par_iter()
        .map(|root| run_partition(&ctx, root))
        .collect();

    let total = ctx.counter.load(std::sync::atomic::Ordering::Relaxed);
    if total > opts.max_collections {
        return Err(Error::Budget {
            level: crossing_level(&ctx),
            max: opts.max_collections,
        });
    }
    stats.total_collections = total;
    let mut sums = vec![Kahan::default(); k_eff + 1];
    for part in &parts {
        for (s, (count, sum)) in part.counts.iter().zip(&part.sums).enumerate().skip(1) {
            stats.collections_per_level[s] += count;
            sums[s].add(sum.value());
        }
    }

    for s in 1..=k_eff {
        let v = sums[s].value();
        if !v.is_finite() {
            return Err(Error::NonFinite { level: s });
        }
        c[s] = v;
        let rel = sums[s].residual().abs() / v.abs().max(1.0);
        stats.comp_residual = stats.comp_residual.max(rel);
    }
    Ok(CoeffOutput {
        coeffs: CoeffVector { c },
        stats,
    })
}
