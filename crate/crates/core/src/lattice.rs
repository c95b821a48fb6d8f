//! Orthogonality lattices of sphere points and exact-arithmetic LLL.
//!
//! For a point `a` with `|a|^2 = 1 (mod q)` whose last two coordinates
//! vanish, the nonzero block `(a_0, ..., a_{d-2})` determines the rank
//! `d-1` lattice
//!
//! ```text
//! L(a) = { x in Z^{d-1} : x_0 a_0 + ... + x_{d-2} a_{d-2} = 0 (mod q) }
//! ```
//!
//! of covolume `q`.  This module constructs an explicit basis of `L(a)`,
//! reduces it with the classical delta-LLL algorithm carried out entirely
//! in exact rational arithmetic, and reports the height invariant
//! `eta(a) = log_q(max_i |u_i|)` of the reduced basis together with the
//! guaranteed over-estimation bound `(d-2)/(2 log2 q)`.  Everything that
//! feeds a certificate — size-reduction, the Lovasz condition, the Babai
//! angle bounds — is decided on exact rationals; floating point only
//! appears in the final logarithm evaluations.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::numeric::{lg2_biguint, rational_to_f64};
use crate::numtheory::{centered_mod, is_probable_prime, mod_inverse};

/// Errors for point validation, basis construction, and reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LatticeError {
    /// The modulus is not an odd prime.
    NotPrime,
    /// The point dimension is below 3 or the coordinate count is wrong.
    BadDimension,
    /// The squared coordinates do not sum to 1 mod q.
    NotOnSphere,
    /// One of the last two coordinates is nonzero mod q.
    TrailingNonzero,
    /// All usable coordinates vanish mod q, so no pivot exists.
    ZeroPoint,
    /// A basis was not a nonempty square integer matrix.
    BadShape,
    /// Gram-Schmidt hit a zero orthogonal vector: rows are dependent.
    DependentRows,
    /// The LLL parameter was outside (1/4, 1).
    BadDelta,
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            LatticeError::NotPrime => "modulus must be an odd prime",
            LatticeError::BadDimension => "point needs dimension d >= 3 with d+1 coordinates",
            LatticeError::NotOnSphere => "coordinates do not satisfy sum of squares = 1 mod q",
            LatticeError::TrailingNonzero => "the last two coordinates must vanish mod q",
            LatticeError::ZeroPoint => "all coordinates vanish mod q",
            LatticeError::BadShape => "basis must be a nonempty square integer matrix",
            LatticeError::DependentRows => "basis rows are linearly dependent",
            LatticeError::BadDelta => "LLL parameter must lie in (1/4, 1)",
        };
        write!(f, "{msg}")
    }
}

impl std::error::Error for LatticeError {}

/// A point on the sphere `|a|^2 = 1 (mod q)` whose last two coordinates
/// vanish, i.e. a member of the codimension-two equatorial sub-sphere.
///
/// Coordinates are stored reduced into `[0, q)`.  The constructor checks
/// every invariant, so a value of this type is always usable downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModPoint {
    q: BigUint,
    coords: Vec<BigUint>,
}

impl ModPoint {
    /// Validates and reduces a point.  `coords` must hold all `d+1`
    /// coordinates (`d >= 3`); arbitrary integers are accepted and reduced
    /// mod `q`.
    pub fn new(q: BigUint, coords: Vec<BigInt>) -> Result<ModPoint, LatticeError> {
        if q < BigUint::from(3u32)
            || (&q % 2u32).is_zero()
            || !is_probable_prime(&q)
        {
            return Err(LatticeError::NotPrime);
        }
        if coords.len() < 4 {
            return Err(LatticeError::BadDimension);
        }
        let qi = BigInt::from(q.clone());
        let reduced: Vec<BigUint> = coords
            .iter()
            .map(|c| {
                let r = ((c % &qi) + &qi) % &qi;
                r.to_biguint().expect("reduced residue is non-negative")
            })
            .collect();
        let n = reduced.len();
        if !reduced[n - 1].is_zero() || !reduced[n - 2].is_zero() {
            return Err(LatticeError::TrailingNonzero);
        }
        let mut sum = BigUint::zero();
        for c in &reduced {
            sum += c * c;
        }
        if !(sum % &q).is_one() {
            return Err(LatticeError::NotOnSphere);
        }
        Ok(ModPoint { q, coords: reduced })
    }

    /// The modulus.
    pub fn q(&self) -> &BigUint {
        &self.q
    }

    /// The sphere dimension `d` (the point has `d+1` coordinates).
    pub fn d(&self) -> usize {
        self.coords.len() - 1
    }

    /// All `d+1` coordinates, reduced into `[0, q)`.
    pub fn coords(&self) -> &[BigUint] {
        &self.coords
    }

    /// The first `d-1` coordinates — the block that determines `L(a)`.
    pub fn active(&self) -> &[BigUint] {
        &self.coords[..self.coords.len() - 2]
    }
}

/// A square integer matrix whose rows are read as lattice basis vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegerBasis {
    rows: Vec<Vec<BigInt>>,
}

impl IntegerBasis {
    /// Wraps rows after checking the matrix is nonempty and square.
    /// Linear independence is *not* checked here; the operations that
    /// require it report [`LatticeError::DependentRows`].
    pub fn new(rows: Vec<Vec<BigInt>>) -> Result<IntegerBasis, LatticeError> {
        let m = rows.len();
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(LatticeError::BadShape);
        }
        Ok(IntegerBasis { rows })
    }

    /// The rank (= ambient dimension) `m`.
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// The basis vectors.
    pub fn rows(&self) -> &[Vec<BigInt>] {
        &self.rows
    }

    /// Consumes the basis, yielding its rows.
    pub fn into_rows(self) -> Vec<Vec<BigInt>> {
        self.rows
    }

    /// Exact determinant via fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        bareiss_det(self.rows.clone())
    }

    /// Squared Euclidean norm of row `i`.
    pub fn norm_sq(&self, i: usize) -> BigUint {
        let s: BigInt = self.rows[i].iter().map(|x| x * x).sum();
        s.to_biguint().expect("squared norm is non-negative")
    }

    /// The largest squared row norm, `M(B)^2`.
    pub fn max_norm_sq(&self) -> BigUint {
        (0..self.rank())
            .map(|i| self.norm_sq(i))
            .max()
            .expect("basis is nonempty")
    }

    /// Gram matrix entry `<row_i, row_j>`.
    fn gram(&self, i: usize, j: usize) -> BigInt {
        dot_int(&self.rows[i], &self.rows[j])
    }
}

fn dot_int(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev; // exact by Bareiss' identity
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// The exact rational Gram-Schmidt state of a basis: the orthogonal
/// vectors, the projection coefficients, and the squared norms
/// `B_i = |star_i|^2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GramSchmidtData {
    /// Orthogonalized vectors, same indexing as the input rows.
    pub star: Vec<Vec<BigRational>>,
    /// `mu[i][j]` (for `j < i`) with `v_i = star_i + sum_j mu[i][j] star_j`.
    pub mu: Vec<Vec<BigRational>>,
    /// Squared norms of the orthogonal vectors.
    pub norms_sq: Vec<BigRational>,
}

fn rat(i: BigInt) -> BigRational {
    BigRational::from_integer(i)
}

fn dot_rat(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// From-scratch exact Gram-Schmidt orthogonalization.
///
/// Fails with [`LatticeError::DependentRows`] when some orthogonal vector
/// degenerates to zero.
pub fn gram_schmidt(basis: &IntegerBasis) -> Result<GramSchmidtData, LatticeError> {
    let m = basis.rank();
    let mut star: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    let mut mu: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    let mut norms_sq: Vec<BigRational> = Vec::with_capacity(m);
    for i in 0..m {
        let mut v: Vec<BigRational> = basis.rows()[i].iter().cloned().map(rat).collect();
        let mut row = Vec::with_capacity(i);
        for j in 0..i {
            let coeff = dot_rat(&v, &star[j]) / &norms_sq[j];
            for (vc, sc) in v.iter_mut().zip(&star[j]) {
                *vc -= &coeff * sc;
            }
            row.push(coeff);
        }
        // The in-place elimination yields mu[i][j] = <v_i, star_j>/B_j
        // because star_j is orthogonal to every star_k (k < j) already
        // subtracted from v.
        let b_sq = dot_rat(&v, &v);
        if b_sq.is_zero() {
            return Err(LatticeError::DependentRows);
        }
        star.push(v);
        mu.push(row);
        norms_sq.push(b_sq);
    }
    Ok(GramSchmidtData { star, mu, norms_sq })
}

/// The classical LLL parameter, 3/4.
pub fn default_delta() -> BigRational {
    BigRational::new(BigInt::from(3), BigInt::from(4))
}

fn check_delta(delta: &BigRational) -> Result<(), LatticeError> {
    let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
    if *delta <= quarter || *delta >= BigRational::one() {
        return Err(LatticeError::BadDelta);
    }
    Ok(())
}

/// Exact-arithmetic delta-LLL reduction (incremental Gram-Schmidt form).
///
/// The Gram-Schmidt state (`mu` triangle and squared norms `B_i`) is
/// maintained through size-reductions and swaps by the classical update
/// formulas, so no orthogonal vectors are ever recomputed from scratch;
/// every comparison is an exact rational one.  The output spans the same
/// lattice and satisfies both reduction conditions (checkable with
/// [`verify_lll`]).
pub fn lll_reduce(basis: &IntegerBasis, delta: &BigRational) -> Result<IntegerBasis, LatticeError> {
    check_delta(delta)?;
    let m = basis.rank();
    let mut b = basis.rows().to_vec();
    let mut mu: Vec<Vec<BigRational>> = (0..m).map(|i| vec![BigRational::zero(); i]).collect();
    let mut bnorm: Vec<BigRational> = vec![BigRational::zero(); m];

    bnorm[0] = rat(dot_int(&b[0], &b[0]));
    if bnorm[0].is_zero() {
        return Err(LatticeError::DependentRows);
    }
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));

    // Size-reduce row k against row l, updating b and the mu triangle.
    let red = |b: &mut Vec<Vec<BigInt>>, mu: &mut Vec<Vec<BigRational>>, k: usize, l: usize| {
        if mu[k][l].abs() <= half {
            return;
        }
        let r = (&mu[k][l] + &half).floor().to_integer();
        let (head, tail) = b.split_at_mut(k);
        let bl = &head[l];
        for (x, y) in tail[0].iter_mut().zip(bl) {
            *x -= &r * y;
        }
        let rr = rat(r);
        for i in 0..l {
            let adj = &rr * &mu[l][i];
            mu[k][i] -= adj;
        }
        mu[k][l] -= rr;
    };

    let mut k = 1usize;
    let mut kmax = 0usize;
    while k < m {
        if k > kmax {
            kmax = k;
            for j in 0..k {
                let mut t = rat(dot_int(&b[k], &b[j]));
                for i in 0..j {
                    t -= &mu[j][i] * &mu[k][i] * &bnorm[i];
                }
                mu[k][j] = t / &bnorm[j];
            }
            let mut t = rat(dot_int(&b[k], &b[k]));
            for i in 0..k {
                t -= &mu[k][i] * &mu[k][i] * &bnorm[i];
            }
            if t <= BigRational::zero() {
                return Err(LatticeError::DependentRows);
            }
            bnorm[k] = t;
        }
        red(&mut b, &mut mu, k, k - 1);
        let lovasz_rhs = (delta - &mu[k][k - 1] * &mu[k][k - 1]) * &bnorm[k - 1];
        if bnorm[k] < lovasz_rhs {
            // Swap rows k-1 and k and patch the Gram-Schmidt state.
            b.swap(k, k - 1);
            {
                let (head, tail) = mu.split_at_mut(k);
                for j in 0..k - 1 {
                    std::mem::swap(&mut head[k - 1][j], &mut tail[0][j]);
                }
            }
            let mu_kk = mu[k][k - 1].clone();
            let b_new = &bnorm[k] + &mu_kk * &mu_kk * &bnorm[k - 1];
            mu[k][k - 1] = &mu_kk * &bnorm[k - 1] / &b_new;
            bnorm[k] = &bnorm[k - 1] * &bnorm[k] / &b_new;
            bnorm[k - 1] = b_new;
            for i in k + 1..=kmax {
                let t = mu[i][k].clone();
                mu[i][k] = &mu[i][k - 1] - &mu_kk * &t;
                mu[i][k - 1] = t + &mu[k][k - 1] * &mu[i][k];
            }
            k = k.max(2) - 1;
        } else {
            for l in (0..k.saturating_sub(1)).rev() {
                red(&mut b, &mut mu, k, l);
            }
            k += 1;
        }
    }
    let out = IntegerBasis::new(b).expect("shape preserved");
    debug_assert_eq!(verify_lll(&out, delta), Ok(true));
    out_det_matches(basis, &out);
    Ok(out)
}

// Reduction must preserve the lattice; same |det| is a cheap witness
// asserted in debug builds.
fn out_det_matches(a: &IntegerBasis, b: &IntegerBasis) {
    debug_assert_eq!(a.det().abs(), b.det().abs());
}

/// Checks both delta-LLL conditions exactly (via an independent
/// from-scratch Gram-Schmidt pass): size reduction `|mu[i][j]| <= 1/2`
/// and the Lovasz condition
/// `delta * B_{i} <= B_{i+1} + mu[i+1][i]^2 * B_i`.
pub fn verify_lll(basis: &IntegerBasis, delta: &BigRational) -> Result<bool, LatticeError> {
    check_delta(delta)?;
    let gs = gram_schmidt(basis)?;
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    for i in 0..basis.rank() {
        for j in 0..i {
            if gs.mu[i][j].abs() > half {
                return Ok(false);
            }
        }
    }
    for i in 1..basis.rank() {
        let lhs = &gs.norms_sq[i] + &gs.mu[i][i - 1] * &gs.mu[i][i - 1] * &gs.norms_sq[i - 1];
        if lhs < delta * &gs.norms_sq[i - 1] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Builds the standard basis of the orthogonality lattice of `active`
/// coordinates mod `q`: with pivot index `piv` (first coordinate that is a
/// unit), the rows are `q * e_piv` and, for each other index `j`,
/// `e_j + centered(-a_piv^{-1} a_j) * e_piv`.  Determinant is `±q`.
pub(crate) fn basis_from_active(
    q: &BigUint,
    active: &[BigUint],
) -> Result<IntegerBasis, LatticeError> {
    let m = active.len();
    let piv = active
        .iter()
        .position(|c| !(c % q).is_zero())
        .ok_or(LatticeError::ZeroPoint)?;
    let inv = mod_inverse(&BigInt::from(active[piv].clone()), q)
        .expect("pivot is a unit mod prime q");
    let mut rows = Vec::with_capacity(m);
    let mut first = vec![BigInt::zero(); m];
    first[piv] = BigInt::from(q.clone());
    rows.push(first);
    for j in 0..m {
        if j == piv {
            continue;
        }
        let c = centered_mod(&-BigInt::from(&inv * &active[j]), q);
        let mut row = vec![BigInt::zero(); m];
        row[piv] = c;
        row[j] = BigInt::one();
        rows.push(row);
    }
    IntegerBasis::new(rows)
}

/// The canonical basis of `L(a)` for a valid point (see
/// [`basis_from_active`]; the pivot permutation is internal and undone in
/// the emitted rows, which live in the original coordinate order).
pub fn lattice_basis_of(a: &ModPoint) -> IntegerBasis {
    basis_from_active(a.q(), a.active())
        .expect("a sphere point always has a unit coordinate")
}

/// The height invariant of a point, as computed from one LLL-reduced
/// basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaResult {
    /// `log_q max_i |u_i|` over the reduced basis (natural-log quotient
    /// evaluated in double precision).
    pub value: f64,
    /// The guaranteed over-estimation of the true invariant:
    /// `(d-2)/(2 log2 q)`.
    pub error_bound: f64,
    /// The reduced basis that realized the value.
    pub basis: IntegerBasis,
    /// Exact `M(B)^2 = max_i |u_i|^2`, for reproducibility.
    pub m_squared: BigUint,
}

/// Computes the height invariant `eta(a)` via 3/4-LLL on `L(a)`.
///
/// The value over-estimates the basis-minimal invariant by at most
/// `error_bound` and always lies in
/// `[1/(d-1) - error_bound, 1 + error_bound]`.
pub fn eta(a: &ModPoint) -> EtaResult {
    let reduced = lll_reduce(&lattice_basis_of(a), &default_delta())
        .expect("constructed basis has determinant ±q, hence independent rows");
    let m_squared = reduced.max_norm_sq();
    let value = lg2_biguint(&m_squared) / (2.0 * lg2_biguint(a.q()));
    let error_bound = (a.d() as f64 - 2.0) / (2.0 * lg2_biguint(a.q()));
    EtaResult {
        value,
        error_bound,
        basis: reduced,
        m_squared,
    }
}

/// Exact squared Babai angles: for each row `v_k`, the squared sine of the
/// angle between `v_k` and the span of the *other* rows, computed as
/// `det(G) / (det(G_k) |v_k|^2)` with `G` the full Gram matrix and `G_k`
/// the Gram matrix with row/column `k` removed.
pub fn babai_sin_sq(basis: &IntegerBasis) -> Result<Vec<BigRational>, LatticeError> {
    let m = basis.rank();
    let mut gram = vec![vec![BigInt::zero(); m]; m];
    for i in 0..m {
        for j in 0..=i {
            let g = basis.gram(i, j);
            gram[j][i] = g.clone();
            gram[i][j] = g;
        }
    }
    let full = bareiss_det(gram.clone());
    if full.is_zero() {
        return Err(LatticeError::DependentRows);
    }
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let sub: Vec<Vec<BigInt>> = gram
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, x)| x.clone())
                    .collect()
            })
            .collect();
        let minor = bareiss_det(sub);
        let denom = &minor * &gram[k][k];
        debug_assert!(denom > BigInt::zero(), "Gram minors of independent rows are positive");
        out.push(BigRational::new(full.clone(), denom));
    }
    Ok(out)
}

/// `sin(theta_k)` for each basis vector (see [`babai_sin_sq`]), evaluated
/// in double precision.  For every 3/4-reduced basis these satisfy
/// `sin(theta_k) >= (sqrt(2)/3)^m`.
pub fn babai_angles(basis: &IntegerBasis) -> Result<Vec<f64>, LatticeError> {
    Ok(babai_sin_sq(basis)?
        .iter()
        .map(|s| rational_to_f64(s).sqrt())
        .collect())
}
