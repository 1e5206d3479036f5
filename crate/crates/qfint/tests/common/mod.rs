#![allow(dead_code)]

use qfint::model::{build_instance, Instance};
use qfint::symmat::SymMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
    lo + (hi - lo) * u
}

pub fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Independent Box–Muller sampler for property checks (not the production
/// generator).
pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1 = (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
        let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0);
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        out.push(r * theta.cos());
        if out.len() < n {
            out.push(r * theta.sin());
        }
    }
    out
}

fn random_support(rng: &mut ChaCha8Rng, n: usize, size: usize) -> Vec<usize> {
    let mut vars: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = pick(rng, i + 1);
        vars.swap(i, j);
    }
    vars.truncate(size);
    vars.sort_unstable();
    vars
}

/// A random instance with m ≤ 5 forms over n ≤ 6 variables, scaled so that
/// every form clears the uniform bound at γ′ = 0.05 with margin. Since the
/// uniform divisor max(m, n) dominates the locality parameter r, such an
/// instance is admissible in both modes.
pub fn random_admissible_instance(rng: &mut ChaCha8Rng) -> Instance {
    let gamma_prime = 0.05;
    let n = 2 + pick(rng, 5); // 2..=6
    let m = 1 + pick(rng, 5); // 1..=5
    let bound = gamma_prime / (m.max(n) as f64);
    let mats: Vec<SymMatrix> = (0..m)
        .map(|_| {
            if pick(rng, 8) == 0 {
                return SymMatrix::zeros(n); // zero forms are admissible and kept
            }
            let size = 1 + pick(rng, 3.min(n));
            let vars = random_support(rng, n, size);
            let mut entries = vec![0.0; n * n];
            for (a, &i) in vars.iter().enumerate() {
                for &j in &vars[a..] {
                    let v = uniform(rng, -1.0, 1.0);
                    entries[i * n + j] = v;
                    entries[j * n + i] = v;
                }
            }
            let raw = SymMatrix::from_rows(n, entries).unwrap();
            let half_norm = 0.5 * raw.op_norm(1e-12);
            if half_norm == 0.0 {
                return SymMatrix::zeros(n);
            }
            let frac = uniform(rng, 0.2, 0.95);
            raw.scale(bound * frac / half_norm)
        })
        .collect();
    build_instance(n, mats).unwrap()
}

pub fn corpus(count: usize, seed: u64) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..count).map(|_| random_admissible_instance(&mut r)).collect()
}

/// All subsets of 0..m as index lists, grouped by size.
pub fn subsets_by_size(m: usize) -> Vec<Vec<Vec<usize>>> {
    let mut by_size: Vec<Vec<Vec<usize>>> = vec![Vec::new(); m + 1];
    for mask in 0u32..(1 << m) {
        let subset: Vec<usize> = (0..m).filter(|&k| mask & (1 << k) != 0).collect();
        by_size[subset.len()].push(subset);
    }
    by_size
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Writes an instance in the CLI file format and returns the path.
pub fn write_instance_file(dir: &std::path::Path, name: &str, inst: &Instance) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, qfint::cli::instance_to_json(inst).render()).unwrap();
    path
}
