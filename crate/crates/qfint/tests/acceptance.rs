//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (visible under `--nocapture`).

mod common;

use num_complex::Complex64;
use qfint::apps::{self, complete_edges, EdgeAlpha, PotentialSpec};
use qfint::cluster;
use qfint::interp;
use qfint::model::{build_instance, Mode, ToleranceConfig};
use qfint::oracle::{self, McTarget};
use qfint::symmat::SymMatrix;
use std::process::Command;
use std::time::Instant;

const CORPUS_SEED: u64 = 20_240_817;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qfint"))
}

/// a1: two identical forms Q = 0.2·I₂ — closed-form value and coefficients.
#[test]
fn a1_two_form_closed_identity() {
    let start = Instant::now();
    let inst = build_instance(
        2,
        vec![
            SymMatrix::scaled_identity(2, 0.2),
            SymMatrix::scaled_identity(2, 0.2),
        ],
    )
    .unwrap();

    let p1 = oracle::exact_value(&inst, Complex64::new(1.0, 0.0)).unwrap();
    assert!(common::rel_err(p1.re, 1.48) <= 1e-12, "p(1) = {}", p1.re);
    assert_eq!(p1.im, 0.0);

    let c = cluster::coeff_vector(&inst, 2).unwrap().c;
    let want = [1.0, 0.4, 0.08];
    for (a, b) in c.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{c:?}");
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0);
    eprintln!(
        "[a1 two-form closed identity] PASS (p(1) = {:.15}, coeffs = {:?}, {:?})",
        p1.re, c, elapsed
    );
}

/// a2: line log-gas product moments equal ∏ j! for 2..5 points, exactly and
/// by Monte Carlo.
#[test]
fn a2_selberg_suite() {
    let start = Instant::now();
    let references = [(2usize, 2.0f64), (3, 12.0), (4, 288.0), (5, 34560.0)];
    for &(points, reference) in &references {
        let spec =
            PotentialSpec::new(1, points, complete_edges(points), EdgeAlpha::Uniform(1.0)).unwrap();
        let inst = apps::build_potential_instance(&spec).unwrap();
        let all: Vec<usize> = (0..inst.m()).collect();
        let exact = oracle::exact_moment(&inst, &all).unwrap();
        assert!(
            common::rel_err(exact, reference) <= 1e-9,
            "{points} points: exact {exact} vs {reference}"
        );

        let mc = oracle::mc_estimate_with(&inst, 1_000_000, 2020, McTarget::ProductOnly);
        assert!(
            (mc.mean - reference).abs() <= 4.0 * mc.stderr,
            "{points} points: mc {} ± {} vs {reference}",
            mc.mean,
            mc.stderr
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0);
    eprintln!("[a2 product-moment references] PASS (2, 12, 288, 34560; {elapsed:?})");
}

/// a3: on 200 random admissible instances, the certified interval contains
/// the exact log-value and the relative error target is met, in both modes
/// and at both ε.
#[test]
fn a3_oracle_equivalence() {
    let start = Instant::now();
    let corpus = common::corpus(200, CORPUS_SEED);
    let mut checks = 0usize;
    for inst in &corpus {
        let exact = oracle::exact_value(inst, Complex64::new(1.0, 0.0)).unwrap().re;
        assert!(exact > 0.0);
        for mode in [Mode::Local, Mode::Uniform] {
            let cfg = ToleranceConfig::new(0.05, mode).unwrap();
            for eps in [1e-2, 1e-4] {
                let est = interp::integrate(inst, &cfg, eps).unwrap();
                assert!(
                    (est.log_value - exact.ln()).abs() <= est.additive_log_error_bound,
                    "certified interval misses the oracle: {} vs {} (bound {})",
                    est.log_value,
                    exact.ln(),
                    est.additive_log_error_bound
                );
                assert!(
                    (est.value - exact).abs() / exact <= eps,
                    "relative error above {eps}: {} vs {exact}",
                    est.value
                );
                checks += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0);
    eprintln!("[a3 oracle equivalence] PASS ({checks} certified runs on 200 instances, {elapsed:?})");
}

/// a4: cluster coefficients equal subset-moment sums; zero beyond degree m.
#[test]
fn a4_coefficient_equivalence() {
    let corpus = common::corpus(200, CORPUS_SEED);
    for inst in &corpus {
        let m = inst.m();
        let c = cluster::coeff_vector(inst, m + 2).unwrap().c;
        let by_size = common::subsets_by_size(m);
        for (s, subsets) in by_size.iter().enumerate() {
            let mut mu = 0.0;
            for subset in subsets {
                mu += oracle::exact_moment(inst, subset).unwrap();
            }
            assert!(
                (c[s] - mu).abs() <= 1e-9 * mu.abs().max(1.0),
                "level {s}: {} vs {}",
                c[s],
                mu
            );
        }
        assert_eq!(c[m + 1], 0.0);
        assert_eq!(c[m + 2], 0.0);
    }
    eprintln!("[a4 coefficient equivalence] PASS (200 instances, degrees 0..m+2)");
}

/// a5: no zeros on the disk of radius 0.151 for admissible instances; a
/// deliberately inadmissible single form localizes its root.
#[test]
fn a5_zero_free_scan() {
    let corpus = common::corpus(200, CORPUS_SEED);
    let mut worst = f64::INFINITY;
    for inst in &corpus {
        let scan = oracle::zero_scan(inst, 0.151, 64).unwrap();
        assert!(scan.min_modulus > 0.0);
        worst = worst.min(scan.min_modulus);
    }

    // p(ω) = 1 + 10ω (trace 20) has its real root at −0.1
    let heavy = build_instance(2, vec![SymMatrix::scaled_identity(2, 10.0)]).unwrap();
    let scan = oracle::zero_scan(&heavy, 0.151, 64).unwrap();
    let resolution = 0.151 / 64.0 + 0.1 * std::f64::consts::TAU / 64.0;
    assert!(
        (scan.argmin - Complex64::new(-0.1, 0.0)).norm() <= resolution,
        "argmin {} not within {resolution} of -0.1",
        scan.argmin
    );
    eprintln!(
        "[a5 zero-free scan] PASS (min |p| over corpus = {worst:.6}, root located at {:.6})",
        scan.argmin.re
    );
}

/// a6: the chosen truncation order is the minimum of the directly evaluated
/// bound, and behaves monotonically in β and ε.
#[test]
fn a6_truncation_order_conformance() {
    let m = 10usize;
    let beta = 3.0f64;
    for eps in [0.5, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
        let target = f64::ln_1p(eps);
        // direct evaluation of m/((k+1)·β^k·(β−1)) for k = 0..20
        let direct = (0..=20)
            .find(|&k| m as f64 / ((k + 1) as f64 * beta.powi(k as i32) * (beta - 1.0)) <= target)
            .expect("bound must drop below the target by k = 20");
        let plan = interp::choose_order(m, eps, beta).unwrap();
        assert_eq!(plan.k, direct, "eps = {eps}");
        assert!(plan.bound <= target);
    }

    let eps = 1e-3f64.exp_m1();
    let narrow = interp::choose_order(m, eps, 1.1).unwrap().k;
    let wide = interp::choose_order(m, eps, 3.0).unwrap().k;
    assert!(narrow > wide);
    let coarse = interp::choose_order(m, 1e-2, 3.0).unwrap().k;
    let fine = interp::choose_order(m, 1e-6, 3.0).unwrap().k;
    assert!(fine >= coarse);
    eprintln!("[a6 truncation order] PASS (minimality over k = 0..20; monotone in beta and eps)");
}

/// Independent series oracle: exp of a polynomial by summing f^j/j!.
fn series_exp(f: &[f64], k: usize) -> Vec<f64> {
    let mut result = vec![0.0; k + 1];
    result[0] = 1.0;
    let mut term = vec![0.0; k + 1];
    term[0] = 1.0;
    for j in 1..=k {
        let mut next = vec![0.0; k + 1];
        for a in 0..=k {
            if term[a] == 0.0 {
                continue;
            }
            for (b, &fb) in f.iter().enumerate() {
                let deg = a + b + 1;
                if deg > k {
                    break;
                }
                next[deg] += term[a] * fb / j as f64;
            }
        }
        term = next;
        for a in 0..=k {
            result[a] += term[a];
        }
    }
    result
}

/// a7: log-Taylor recurrence inverts series exponentiation on 100 random
/// polynomials of degree ≤ 8.
#[test]
fn a7_log_taylor_series_inversion() {
    let mut rng = common::rng(4242);
    for trial in 0..100 {
        let degree = 1 + common::pick(&mut rng, 8);
        let mut c = vec![1.0];
        for _ in 0..degree {
            c.push(common::uniform(&mut rng, -0.5, 0.5));
        }
        c.resize(9, 0.0); // re-expand everything to degree 8
        let f = interp::log_taylor(&c);
        let back = series_exp(&f, 8);
        for (i, (a, b)) in back.iter().zip(&c).enumerate() {
            assert!(
                (a - b).abs() <= 1e-10 * b.abs().max(1.0),
                "trial {trial}, coefficient {i}: {a} vs {b}"
            );
        }
    }
    eprintln!("[a7 log-Taylor inversion] PASS (100 random polynomials, degree ≤ 8, tol 1e-10)");
}

/// a8: feasibility pipeline — exact β at m = n, the pointwise product bound
/// on normalized instances, and exit code 6 for a bad normalization.
#[test]
fn a8_feasibility_pipeline() {
    for n in [1usize, 2, 5, 17] {
        let p = apps::solve_beta(n, n, 1.0).unwrap();
        assert!((p.beta - 0.5).abs() <= 1e-12, "beta = {}", p.beta);
    }

    // normalized regression instances
    let mut instances = Vec::new();
    for n in [2usize, 3] {
        let mats: Vec<SymMatrix> = (0..n)
            .map(|k| SymMatrix::from_triplets(n, &[(k, k, 1.0)]).unwrap())
            .collect();
        instances.push(build_instance(n, mats).unwrap());
    }
    let mut rng = common::rng(909);
    for (n, m) in [(4usize, 3usize), (3, 5), (5, 5)] {
        let mats: Vec<SymMatrix> = (0..m)
            .map(|_| {
                let c: Vec<f64> = (0..n * n)
                    .map(|_| common::uniform(&mut rng, -1.0, 1.0))
                    .collect();
                let mut q = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        q[i * n + j] = (0..n).map(|t| c[i * n + t] * c[j * n + t]).sum();
                    }
                }
                SymMatrix::from_rows(n, q).unwrap()
            })
            .collect();
        let raw = build_instance(n, mats).unwrap();
        instances.push(apps::normalize_instance(&raw).unwrap());
    }

    let mut checked = 0usize;
    for inst in &instances {
        for alpha in [1.0f64, 0.7] {
            let params = apps::solve_beta(inst.m(), inst.n(), alpha).unwrap();
            assert!(params.beta < alpha);
            let factor = (alpha / params.beta) * (params.beta / alpha - 1.0).exp();
            let ceiling = factor.powi(inst.m() as i32) * (1.0 + 1e-12);
            for _ in 0..10_000 {
                let x = common::gaussian_vector(&mut rng, inst.n());
                let mut product = 1.0;
                let mut qsum = 0.0;
                for form in inst.forms() {
                    let q = form.matrix.eval_form(&x).unwrap();
                    product *= 1.0 + alpha * q;
                    qsum += q;
                }
                product *= (-params.beta * qsum).exp();
                assert!(
                    product <= ceiling,
                    "pointwise bound violated: {product} > {ceiling} (alpha {alpha}, m {}, n {})",
                    inst.m(),
                    inst.n()
                );
                checked += 1;
            }
        }
    }

    // Σ Q_k = diag(1, 1, 0) must exit with code 6
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"n": 3, "forms": [{"triplets": [[0, 0, 1.0]]}, {"triplets": [[1, 1, 1.0]]}]}"#,
    )
    .unwrap();
    let out = bin()
        .args(["feasibility", "--instance"])
        .arg(&bad)
        .args(["--alpha", "1.0", "--backend", "oracle"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(6), "{}", String::from_utf8_lossy(&out.stderr));

    eprintln!(
        "[a8 feasibility pipeline] PASS (beta = 1/2 at m = n; {checked} pointwise bound checks; exit 6 on bad normalization)"
    );
}

fn strip_timing(report: &str) -> String {
    report
        .lines()
        .filter(|line| !line.contains("timing_ms"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// a9: byte-identical reports across repeated runs with the same seed and
/// thread count.
#[test]
fn a9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();

    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"n": 1, "forms": []}"#).unwrap();
    files.push(empty);

    let small = dir.path().join("small.json");
    let inst = build_instance(
        2,
        vec![
            SymMatrix::scaled_identity(2, 0.02),
            SymMatrix::scaled_identity(2, 0.02),
        ],
    )
    .unwrap();
    std::fs::write(&small, qfint::cli::instance_to_json(&inst).render()).unwrap();
    files.push(small);

    let pot = dir.path().join("potential.json");
    let status = bin()
        .args(["build-potential", "--d", "2", "--points", "3", "--edges", "complete", "--alpha", "auto", "--out"])
        .arg(&pot)
        .output()
        .unwrap();
    assert!(status.status.success());
    files.push(pot);

    for (i, inst) in common::corpus(3, 777).iter().enumerate() {
        files.push(common::write_instance_file(
            dir.path(),
            &format!("corpus{i}.json"),
            inst,
        ));
    }

    for file in &files {
        let run = || {
            bin()
                .args(["integrate", "--epsilon", "1e-4", "--threads", "2", "--instance"])
                .arg(file)
                .output()
                .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(
            strip_timing(&String::from_utf8(a.stdout).unwrap()),
            strip_timing(&String::from_utf8(b.stdout).unwrap()),
            "integrate report differs for {}",
            file.display()
        );
    }

    let selberg = dir.path().join("selberg3.json");
    let status = bin()
        .args(["build-potential", "--d", "1", "--points", "3", "--edges", "complete", "--alpha", "1.0", "--out"])
        .arg(&selberg)
        .output()
        .unwrap();
    assert!(status.status.success());
    files.push(selberg);

    for file in &files {
        let run = || {
            bin()
                .args(["oracle", "--mc", "100000", "--seed", "11", "--threads", "2", "--instance"])
                .arg(file)
                .output()
                .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(
            strip_timing(&String::from_utf8(a.stdout).unwrap()),
            strip_timing(&String::from_utf8(b.stdout).unwrap()),
            "mc report differs for {}",
            file.display()
        );
    }

    eprintln!(
        "[a9 determinism] PASS ({} integrate files, {} mc files, byte-identical modulo timing)",
        files.len() - 1,
        files.len()
    );
}
