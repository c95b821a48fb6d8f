//! Randomized cross-cutting properties: each pits a library path against
//! either an exact restatement of its contract or an independent
//! brute-force recomputation from the `common` oracles.

mod common;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphere_lift::{
    compute_box, csv_string, minimal_lift, run_experiment, sample_point, scan_window, Budgets,
    ExperimentConfig, LiftError, SampleMode, SamplerSpec, SearchMode,
};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn box_construction_matches_hypothesis_and_is_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let m = rng.gen_range(1..=4usize);
        let norms: Vec<BigRational> = (0..m)
            .map(|_| rat(rng.gen_range(1..1000), rng.gen_range(1..30)))
            .collect();
        let m_sq = rat(rng.gen_range(1..400_000), rng.gen_range(1..10));
        let four_m_sq = rat(4 * (m * m) as i64, 1);
        let expect_fail = norms.iter().position(|w| &four_m_sq * w >= m_sq);
        match compute_box(&norms, &m_sq) {
            Ok(bx) => {
                assert_eq!(expect_fail, None, "box built although hypothesis fails");
                assert_eq!(bx.m, m);
                assert_eq!(bx.half_widths.len(), m);
                // Under the hypothesis (2m)^2 |w|^2 < M^2 every half-width
                // A = M/(m|w|) - 1/2 exceeds 3/2; allow double-precision
                // slop in its evaluation.
                let floor = rat(1499, 1000);
                for a in &bx.half_widths {
                    assert!(*a > floor, "half-width under 3/2: {a}");
                }
                for s in &bx.offsets {
                    assert!(s.is_zero());
                }
            }
            Err(LiftError::HypothesisFailed(i)) => {
                assert_eq!(Some(i), expect_fail, "wrong first failing index");
            }
            Err(e) => panic!("unexpected box error: {e}"),
        }
    }
}

fn brute_window(q: i64, b: &[i64], n: i64, r: i64) -> (u64, bool) {
    fn rec(
        b: &[i64],
        idx: usize,
        t: &mut Vec<i64>,
        q: i64,
        n: i64,
        r: i64,
        size: &mut u64,
        repr: &mut bool,
    ) {
        if idx == b.len() {
            let norm: i64 = t.iter().map(|x| x * x).sum();
            if norm >= r * r {
                return;
            }
            let shifted: i64 = t
                .iter()
                .zip(b)
                .map(|(ti, bi)| {
                    let c = q * ti + bi;
                    c * c
                })
                .sum();
            let val = n - shifted;
            if val < 0 || val % (q * q) != 0 {
                return;
            }
            *size += 1;
            if common::brute_two_squares((val / (q * q)) as u64).is_some() {
                *repr = true;
            }
            return;
        }
        for ti in -(r - 1)..=(r - 1) {
            t.push(ti);
            rec(b, idx + 1, t, q, n, r, size, repr);
            t.pop();
        }
    }
    let mut size = 0;
    let mut repr = false;
    rec(b, 0, &mut Vec::new(), q, n, r, &mut size, &mut repr);
    (size, repr)
}

#[test]
fn window_scan_agrees_with_independent_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let budgets = Budgets::default();
    let qs = [5i64, 7, 11, 13];
    for trial in 0..20 {
        let q = qs[rng.gen_range(0..qs.len())];
        let m = if trial % 2 == 0 { 2 } else { 3 };
        let r: u32 = rng.gen_range(2..=4);
        let b: Vec<i64> = loop {
            let cand: Vec<i64> = (0..m).map(|_| rng.gen_range(0..q)).collect();
            if cand.iter().map(|x| x * x).sum::<i64>() % q != 0 {
                break cand;
            }
        };
        let u: i64 = rng.gen_range(1..=50);
        let n = b.iter().map(|x| x * x).sum::<i64>() % q + q * u;
        let want = brute_window(q, &b, n, r as i64);
        let got = scan_window(
            &BigUint::from(q as u64),
            &b.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>(),
            &BigUint::from(n as u64),
            r,
            &budgets,
        );
        assert_eq!(got, want, "q={q} b={b:?} n={n} r={r}");
    }
}

#[test]
fn csv_rows_recompute_from_printed_fields() {
    let specs: Vec<SamplerSpec> = (0..6)
        .map(|i| SamplerSpec {
            mode: SampleMode::Generic,
            q: BigUint::from(10007u64),
            d: 4,
            seed: 4200 + i,
            r_range: (1, 3),
        })
        .collect();
    let config = ExperimentConfig {
        p: Some(BigUint::from(3u32)),
        ..ExperimentConfig::default()
    };
    let records = run_experiment(&specs, &config, None, None).unwrap();
    let csv = csv_string(&records);
    let mut checked = 0;
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 12);
        if cells[11] != "ok" {
            continue;
        }
        assert_eq!(cells[0], "10007");
        assert_eq!(cells[1], "4");
        assert_eq!(cells[2], "3");
        assert_eq!(cells[3].split(';').count(), 5);
        assert_eq!(cells[8], "generic");
        let eta: f64 = cells[4].parse().unwrap();
        let h: f64 = cells[5].parse().unwrap();
        // w_p reconstructs from the integer fields at full precision, so
        // its printed form must match exactly.
        let w = 0.75 * h * 3f64.ln() / 10007f64.ln();
        assert_eq!(cells[6], format!("{w:.6}"));
        // predicted_w_p was printed from the unrounded eta; recomputing
        // from the rounded cell can differ in the last digit.
        let predicted: f64 = cells[7].parse().unwrap();
        assert!((predicted - 0.75 * (1.0 + eta)).abs() < 2e-6);
        checked += 1;
    }
    assert!(checked >= 5, "expected mostly ok rows, saw {checked}");
}

#[test]
fn exact_lifts_verify_and_heuristic_matches() {
    for (i, q) in [11u64, 13, 17, 19].into_iter().enumerate() {
        for d in [3usize, 4] {
            let spec = SamplerSpec {
                mode: SampleMode::Generic,
                q: BigUint::from(q),
                d,
                seed: 900 + 10 * i as u64 + d as u64,
                r_range: (1, 2),
            };
            let a = sample_point(&spec).unwrap();
            let p = BigUint::from(3u32);
            let exact = minimal_lift(&a, &p, SearchMode::Exact, &Budgets::default(), 4.0)
                .unwrap_or_else(|e| panic!("exact lift failed for q={q} d={d}: {e}"));
            assert!(exact.certified_minimal);
            assert!(exact.lift.verify(&a));
            assert_eq!(exact.lift.h, exact.h_min);
            let heur = minimal_lift(&a, &p, SearchMode::Heuristic, &Budgets::default(), 4.0)
                .unwrap_or_else(|e| panic!("heuristic lift failed for q={q} d={d}: {e}"));
            assert!(heur.lift.verify(&a));
            assert_eq!(heur.h_min, exact.h_min, "q={q} d={d}");
        }
    }
}

#[test]
fn shipped_prime_file_loads() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/primes_130_digit.txt");
    let primes = sphere_lift::read_prime_file(&path).unwrap();
    assert_eq!(primes.len(), 5);
    for p in &primes {
        assert_eq!(p.to_string().len(), 130);
    }
}

#[test]
fn experiment_runs_are_deterministic() {
    let specs: Vec<SamplerSpec> = (0..3)
        .map(|i| SamplerSpec {
            mode: SampleMode::RandomLog,
            q: BigUint::from(10007u64),
            d: 3,
            seed: 77 + i,
            r_range: (1, 3),
        })
        .collect();
    let config = ExperimentConfig {
        p: Some(BigUint::from(3u32)),
        ..ExperimentConfig::default()
    };
    let first = csv_string(&run_experiment(&specs, &config, None, None).unwrap());
    let second = csv_string(&run_experiment(&specs, &config, None, None).unwrap());
    assert_eq!(first, second);
}
