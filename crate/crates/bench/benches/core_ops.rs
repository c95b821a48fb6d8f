//! Criterion benchmarks for the hot paths: LLL reduction, factoring,
//! two-square decomposition, the eta invariant, and a small minimal-lift
//! search.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use num_bigint::{BigInt, BigUint, RandBigInt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphere_lift::{
    default_delta, eta, factorize, lattice_basis_of, lll_reduce, minimal_lift, two_squares,
    Budgets, IntegerBasis, ModPoint, SearchMode,
};

/// A deterministic point on the sphere mod `q` with `d + 1` coordinates.
fn fixture_point(q: u64, d: usize, seed: u64) -> ModPoint {
    let q = BigUint::from(q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut coords: Vec<BigInt> = (0..d - 2)
            .map(|_| BigInt::from(rng.gen_range(0..10_000u64)) % BigInt::from(q.clone()))
            .collect();
        let sum = coords
            .iter()
            .map(|c| (c * c) % BigInt::from(q.clone()))
            .sum::<BigInt>();
        // Complete with a square root of 1 - sum when one exists.
        let residual =
            ((BigInt::from(1) - sum) % BigInt::from(q.clone()) + BigInt::from(q.clone()))
                % BigInt::from(q.clone());
        if let Some(root) = sphere_lift::sqrt_mod_p(&residual.to_biguint().unwrap(), &q) {
            coords.push(BigInt::from(root));
            coords.push(BigInt::from(0));
            coords.push(BigInt::from(0));
            return ModPoint::new(q, coords).unwrap();
        }
    }
}

fn bench_lll(c: &mut Criterion) {
    let q: BigUint = "100000000000000000039".parse().unwrap();
    let point = {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        loop {
            let mut coords: Vec<BigInt> = (0..4)
                .map(|_| BigInt::from(rng.gen_biguint_below(&q)))
                .collect();
            let qi = BigInt::from(q.clone());
            let sum = coords.iter().map(|c| (c * c) % &qi).sum::<BigInt>();
            let residual = ((BigInt::from(1) - sum) % &qi + &qi) % &qi;
            if let Some(root) = sphere_lift::sqrt_mod_p(&residual.to_biguint().unwrap(), &q) {
                coords.push(BigInt::from(root));
                coords.push(BigInt::from(0));
                coords.push(BigInt::from(0));
                break ModPoint::new(q.clone(), coords).unwrap();
            }
        }
    };
    let basis = lattice_basis_of(&point);
    let delta = default_delta();
    c.bench_function("lll_reduce_d6_q21digit", |b| {
        b.iter(|| lll_reduce(black_box(&basis), black_box(&delta)).unwrap())
    });
}

fn bench_factorize(c: &mut Criterion) {
    // A balanced 38-digit semiprime keeps Pollard rho busy briefly.
    let n: BigUint = (BigUint::from(1_000_003u64) * BigUint::from(1_000_033u64))
        * (BigUint::from(999_983u64) * BigUint::from(1_000_037u64));
    c.bench_function("factorize_four_small_primes", |b| {
        b.iter(|| factorize(black_box(&n), 1 << 16))
    });
}

fn bench_two_squares(c: &mut Criterion) {
    // Every prime factor is 1 mod 4, so the decomposition must factor,
    // split each prime, and compose the Gaussian factors.
    let n = BigUint::from(5u64.pow(3) * 13 * 17 * 29 * 37);
    c.bench_function("two_squares_structured", |b| {
        b.iter(|| two_squares(black_box(&n), 1 << 15))
    });
}

fn bench_eta(c: &mut Criterion) {
    let point = fixture_point(1_000_003, 4, 9);
    c.bench_function("eta_d4_q7digit", |b| b.iter(|| eta(black_box(&point))));
}

fn bench_minimal_lift(c: &mut Criterion) {
    let q = BigUint::from(7u32);
    let coords = vec![
        BigInt::from(2),
        BigInt::from(2),
        BigInt::from(0),
        BigInt::from(0),
    ];
    let point = ModPoint::new(q, coords).unwrap();
    let p = BigUint::from(3u32);
    c.bench_function("minimal_lift_q7_p3_exact", |b| {
        b.iter(|| {
            minimal_lift(
                black_box(&point),
                black_box(&p),
                SearchMode::Exact,
                &Budgets::default(),
                4.0,
            )
            .unwrap()
        })
    });
}

fn bench_basis_validity(c: &mut Criterion) {
    let point = fixture_point(1_000_003, 5, 4);
    let basis = lattice_basis_of(&point);
    c.bench_function("det_bareiss_d5", |b| {
        b.iter(|| IntegerBasis::new(black_box(basis.rows().to_vec())).unwrap().det())
    });
}

criterion_group!(
    benches,
    bench_lll,
    bench_factorize,
    bench_two_squares,
    bench_eta,
    bench_minimal_lift,
    bench_basis_validity
);
criterion_main!(benches);
