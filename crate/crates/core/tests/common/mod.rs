//! Brute-force oracles shared by the integration suites.
//!
//! Each oracle recomputes a library result by direct enumeration with no
//! code in common with the library path it checks, at sizes where
//! exhaustion is feasible. All converters panic outside the small-input
//! domain the oracles are meant for; a panic here means a test asked the
//! oracle something it cannot certify, not that the library is wrong.

// Each integration target uses its own subset of these oracles.
#![allow(dead_code)]

use num_traits::ToPrimitive;
use sphere_lift::{eta, ModPoint};

/// Floor of the square root, exact.
pub fn isqrt_u64(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r > 0 && r.checked_mul(r).map_or(true, |s| s > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).map_or(false, |s| s <= n) {
        r += 1;
    }
    r
}

/// Floor of the square root for non-negative `i128`, exact.
pub fn isqrt_i128(n: i128) -> i128 {
    assert!(n >= 0);
    let mut r = (n as f64).sqrt() as i128;
    while r > 0 && r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Direct two-squares witness: the smallest `x` with `n - x^2` a perfect
/// square, if any.
pub fn brute_two_squares(n: u64) -> Option<(u64, u64)> {
    let mut x = 0u64;
    while 2 * x * x <= n {
        let rem = n - x * x;
        let y = isqrt_u64(rem);
        if y * y == rem {
            return Some((x, y));
        }
        x += 1;
    }
    None
}

fn mod_pow_i128(base: i128, exp: u32, modulus: i128) -> i128 {
    let mut acc: i128 = 1;
    let b = base.rem_euclid(modulus);
    for _ in 0..exp {
        acc = (acc * b).rem_euclid(modulus);
    }
    acc
}

fn big_to_i128(x: &num_bigint::BigInt) -> i128 {
    x.to_i128().expect("oracle inputs fit in i128")
}

fn biguint_to_i128(x: &num_bigint::BigUint) -> i128 {
    x.to_i128().expect("oracle inputs fit in i128")
}

/// Exhaustive check that some integer vector `n` of length `d+1`
/// satisfies the height-`h` congruences against `a` and has norm
/// `p^{2h}`: the active coordinates run over `a_i p^h + q Z` inside the
/// sphere of radius `p^h`, and the two trailing coordinates (both `0 mod
/// q`) are absorbed into a two-squares test on the residual over `q^2`.
fn height_solvable(q: i128, active: &[i128], p: i128, h: u32, steps: &mut u64) -> bool {
    let n_total = p.pow(2 * h);
    let ph = mod_pow_i128(p, h, q);
    let b: Vec<i128> = active.iter().map(|a| (a * ph).rem_euclid(q)).collect();
    let q_sq = q * q;
    fn rec(b: &[i128], idx: usize, rem: i128, q: i128, q_sq: i128, steps: &mut u64) -> bool {
        if idx == b.len() {
            if rem % q_sq != 0 {
                return false;
            }
            let rr = rem / q_sq;
            return brute_two_squares(rr as u64).is_some();
        }
        let lim = isqrt_i128(rem);
        let mut x = b[idx] - q * (b[idx] + lim).div_euclid(q);
        while x <= lim {
            *steps += 1;
            assert!(*steps < 300_000_000, "oracle stepped out of its domain");
            if rec(b, idx + 1, rem - x * x, q, q_sq, steps) {
                return true;
            }
            x += q;
        }
        false
    }
    rec(&b, 0, n_total, q, q_sq, steps)
}

/// Smallest height `h <= h_max` at which `a` admits a lift with
/// denominator `p^h`, by exhaustive integer search; `None` when no
/// height in range is solvable. Ascending scan makes the first solvable
/// height minimal (a `p`-divisible solution at `h` descends to one at
/// `h-1`, so it cannot be the first).
pub fn oracle_min_height(a: &ModPoint, p: u64, h_max: u32) -> Option<u32> {
    let q = biguint_to_i128(a.q());
    let active: Vec<i128> = a.active().iter().map(biguint_to_i128).collect();
    let mut steps = 0u64;
    (0..=h_max).find(|&h| height_solvable(q, &active, p as i128, h, &mut steps))
}

/// Determinant by Laplace expansion; fine for the small ranks the
/// oracles see.
pub fn det_i128(mat: &[Vec<i128>]) -> i128 {
    let n = mat.len();
    if n == 1 {
        return mat[0][0];
    }
    let mut det = 0i128;
    for (j, &lead) in mat[0].iter().enumerate() {
        if lead == 0 {
            continue;
        }
        let minor: Vec<Vec<i128>> = mat[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect();
        let sign = if j % 2 == 0 { 1 } else { -1 };
        det += sign * lead * det_i128(&minor);
    }
    det
}

/// Rank by fraction-free Gaussian elimination.
fn rank_i128(mut mat: Vec<Vec<i128>>) -> usize {
    let rows = mat.len();
    if rows == 0 {
        return 0;
    }
    let cols = mat[0].len();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| mat[r][col] != 0) else {
            continue;
        };
        mat.swap(rank, pivot);
        for r in rank + 1..rows {
            if mat[r][col] != 0 {
                let (p, f) = (mat[rank][col], mat[r][col]);
                for c in 0..cols {
                    mat[r][c] = mat[r][c] * p - mat[rank][c] * f;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// The true `eta(a)` from the successive-minimum `lambda_m` of `L(a)`,
/// found by exhaustive enumeration: every lattice vector with norm up to
/// the library basis's `M` is generated, sorted, and greedily collected
/// into an independent set. The frame (the library's reduced basis) is
/// first verified to be a genuine basis of `L(a)` by two facts the
/// library is not trusted for: each row annihilates the active
/// coordinates mod `q` (so its span lies inside `L(a)`), and its
/// determinant is `q` in absolute value, the full covolume (so the span
/// is all of `L(a)`).
pub fn oracle_eta(a: &ModPoint) -> f64 {
    let res = eta(a);
    let rows: Vec<Vec<i128>> = res
        .basis
        .rows()
        .iter()
        .map(|r| r.iter().map(big_to_i128).collect())
        .collect();
    let m = rows.len();
    let q = biguint_to_i128(a.q());
    let active: Vec<i128> = a.active().iter().map(biguint_to_i128).collect();
    assert_eq!(active.len(), m);
    for row in &rows {
        let dot: i128 = row.iter().zip(&active).map(|(x, y)| x * y).sum();
        assert_eq!(dot.rem_euclid(q), 0, "frame row lies in the lattice");
    }
    assert_eq!(det_i128(&rows).abs(), q, "frame covolume equals q");
    let m_sq = biguint_to_i128(&res.m_squared);

    // Double-precision Gram-Schmidt of the frame, used only to bound the
    // enumeration; membership of a candidate is decided by its exact
    // integer norm.
    let rf: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|&v| v as f64).collect())
        .collect();
    let mut bstar = rf.clone();
    let mut mu = vec![vec![0.0f64; m]; m];
    let mut bnorm = vec![0.0f64; m];
    for i in 0..m {
        for j in 0..i {
            let d: f64 = rf[i].iter().zip(&bstar[j]).map(|(x, y)| x * y).sum();
            mu[i][j] = d / bnorm[j];
            for k in 0..m {
                bstar[i][k] -= mu[i][j] * bstar[j][k];
            }
        }
        bnorm[i] = bstar[i].iter().map(|x| x * x).sum();
    }

    let radius = m_sq as f64 * (1.0 + 1e-9) + 1.0;
    let mut found: Vec<(i128, Vec<i128>)> = Vec::new();
    let mut x = vec![0i64; m];
    let mut nodes = 0u64;
    fn descend(
        level: isize,
        budget: f64,
        x: &mut [i64],
        rows: &[Vec<i128>],
        mu: &[Vec<f64>],
        bnorm: &[f64],
        m_sq: i128,
        found: &mut Vec<(i128, Vec<i128>)>,
        nodes: &mut u64,
    ) {
        *nodes += 1;
        assert!(*nodes < 30_000_000, "enumeration outside oracle domain");
        if level < 0 {
            let m = rows.len();
            let dim = rows[0].len();
            let mut v = vec![0i128; dim];
            for i in 0..m {
                for k in 0..dim {
                    v[k] += x[i] as i128 * rows[i][k];
                }
            }
            let norm: i128 = v.iter().map(|c| c * c).sum();
            if norm > 0 && norm <= m_sq {
                found.push((norm, v));
            }
            return;
        }
        let j = level as usize;
        let center: f64 = (j + 1..rows.len()).map(|i| x[i] as f64 * mu[i][j]).sum();
        let span = (budget.max(0.0) / bnorm[j]).sqrt() + 1e-6;
        let lo = (-center - span).ceil() as i64;
        let hi = (-center + span).floor() as i64;
        for xi in lo..=hi {
            x[j] = xi;
            let used = (xi as f64 + center) * (xi as f64 + center) * bnorm[j];
            descend(
                level - 1,
                budget - used,
                x,
                rows,
                mu,
                bnorm,
                m_sq,
                found,
                nodes,
            );
        }
        x[j] = 0;
    }
    descend(
        (m - 1) as isize,
        radius,
        &mut x,
        &rows,
        &mu,
        &bnorm,
        m_sq,
        &mut found,
        &mut nodes,
    );

    found.sort_by(|a, b| a.0.cmp(&b.0));
    let mut sel: Vec<Vec<i128>> = Vec::new();
    let mut lambda_sq = None;
    for (norm, v) in found {
        let mut probe = sel.clone();
        probe.push(v.clone());
        if rank_i128(probe) > sel.len() {
            sel.push(v);
            if sel.len() == m {
                lambda_sq = Some(norm);
                break;
            }
        }
    }
    let lambda_sq = lambda_sq.expect("radius M covers m independent vectors");
    (lambda_sq as f64).log2() / (2.0 * (q as f64).log2())
}
