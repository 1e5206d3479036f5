//! Behavior past the oracle guards: the polynomial identity through point
//! evaluations, and instances with many forms or many variables where only
//! the estimator and Monte Carlo can be compared.

mod common;

use num_complex::Complex64;
use qfint::cluster;
use qfint::interp;
use qfint::model::{build_instance, locality_params, ToleranceConfig};
use qfint::oracle;
use qfint::symmat::SymMatrix;

/// Solves the square Vandermonde system for polynomial coefficients.
fn fit_polynomial(points: &[(f64, f64)]) -> Vec<f64> {
    let n = points.len();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for (row, &(x, y)) in points.iter().enumerate() {
        let mut p = 1.0;
        for col in 0..n {
            a[row * n + col] = p;
            p *= x;
        }
        b[row] = y;
    }
    // Gaussian elimination with partial pivoting
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .abs()
                    .partial_cmp(&a[r2 * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        for k in 0..n {
            a.swap(col * n + k, pivot * n + k);
        }
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    x
}

/// Evaluating p(ω) at m+1 real points recovers the cluster coefficients.
#[test]
fn point_evaluations_determine_the_coefficients() {
    let mut rng = common::rng(31_337);
    for _ in 0..25 {
        let inst = loop {
            let candidate = common::random_admissible_instance(&mut rng);
            if candidate.m() <= 4 {
                break candidate;
            }
        };
        let m = inst.m();
        let points: Vec<(f64, f64)> = (0..=m)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / m.max(1) as f64;
                let y = oracle::exact_value(&inst, Complex64::new(x, 0.0)).unwrap().re;
                (x, y)
            })
            .collect();
        let fitted = fit_polynomial(&points);
        let c = cluster::coeff_vector(&inst, m).unwrap().c;
        for (s, (a, b)) in fitted.iter().zip(&c).enumerate() {
            assert!(
                (a - b).abs() <= 1e-9 * b.abs().max(1.0),
                "coefficient {s}: fitted {a} vs enumerated {b}"
            );
        }
    }
}

/// A ring of 30 coupled forms: far beyond the exact oracle, the certified
/// estimate and Monte Carlo still agree.
#[test]
fn ring_instance_beyond_the_oracle_guard() {
    let m = 30usize;
    let n = 30usize;
    let cfg = ToleranceConfig::default();
    let bound = cfg.gamma_prime / 2.0; // ring locality: r_dep = r_int = 2
    let mats: Vec<SymMatrix> = (0..m)
        .map(|k| {
            let j = (k + 1) % n;
            let (lo, hi) = (k.min(j), k.max(j));
            let raw = SymMatrix::from_triplets(
                n,
                &[(lo, lo, 1.0), (lo, hi, -0.6), (hi, hi, 0.8)],
            )
            .unwrap();
            let scale = 0.9 * bound / (0.5 * raw.op_norm(1e-12));
            raw.scale(scale)
        })
        .collect();
    let inst = build_instance(n, mats).unwrap();
    assert_eq!(locality_params(&inst).r, 2);

    let eps = 1e-2;
    let est = interp::integrate(&inst, &cfg, eps).unwrap();
    assert!(est.value > 0.0);
    let mc = oracle::mc_estimate(&inst, 400_000, 99);
    assert!(
        (mc.mean - est.value).abs() <= 4.0 * mc.stderr + eps * est.value,
        "mc {} ± {} vs certified {}",
        mc.mean,
        mc.stderr,
        est.value
    );
}

/// Many ambient variables, few local forms: the support-restricted kernels
/// keep the estimator cheap when n ≫ r.
#[test]
fn wide_instance_with_local_forms() {
    let n = 400usize;
    let m = 10usize;
    let cfg = ToleranceConfig::default();
    let mut rng = common::rng(8_080);
    let mats: Vec<SymMatrix> = (0..m)
        .map(|k| {
            // three consecutive variables per form, spaced out: disjoint
            // unless neighbors overlap via the shared middle block
            let base = k * 37 % (n - 3);
            let raw = SymMatrix::from_triplets(
                n,
                &[
                    (base, base, common::uniform(&mut rng, 0.2, 1.0)),
                    (base, base + 2, common::uniform(&mut rng, -0.5, 0.5)),
                    (base + 1, base + 1, common::uniform(&mut rng, 0.2, 1.0)),
                ],
            )
            .unwrap();
            let r_guess = 3.0f64.max(1.0);
            let target = 0.8 * cfg.gamma_prime / r_guess;
            raw.scale(target / (0.5 * raw.op_norm(1e-12)))
        })
        .collect();
    let inst = build_instance(n, mats).unwrap();

    let start = std::time::Instant::now();
    let est = interp::integrate(&inst, &cfg, 1e-4).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let mc = oracle::mc_estimate(&inst, 50_000, 7);
    assert!(
        (mc.mean - est.value).abs() <= 4.0 * mc.stderr + 1e-4 * est.value,
        "mc {} ± {} vs certified {}",
        mc.mean,
        mc.stderr,
        est.value
    );
}
