//! The minimal-height lift solver.
//!
//! A point `a` on the mod-`q` sphere with vanishing last two coordinates
//! lifts to a rational point `s = n / p^h` on the unit sphere with
//! `n ≡ p^h a (mod q)` exactly when the integer vector `n` satisfies
//!
//! ```text
//! n_0^2 + ... + n_d^2 = p^{2h},   n_i = q t_i + b_i  (i <= d-2),
//! n_{d-1} = q t_{d-1},  n_d = q t_d,     b_i = p^h a_i mod q.
//! ```
//!
//! Eliminating the last two coordinates turns this into: find an integer
//! vector `t` in a shifted copy of the orthogonality lattice of `b` such
//! that `F(t) = (N - |q t + b|^2)/q^2` is a non-negative sum of two
//! squares (`N = p^{2h}`).  The solver walks `h = 0, 1, 2, ...` and for
//! each height runs a recursive search over an LLL-reduced lattice basis:
//! coordinates with long basis vectors take one of a provably bounded
//! number of integer values (line bound) and are branched on; once every
//! remaining vector is short against the sphere radius the solution set
//! is confined to an explicit box (box bound) that is either enumerated
//! exhaustively (small case, with completeness certified by exact
//! arithmetic) or scanned in a deterministic near-to-far order under a
//! candidate budget (large case).  Every arithmetic decision along the
//! certified paths — radii, box hypotheses, range cuts, residual values —
//! is made on exact integers or rationals.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::lattice::{
    basis_from_active, default_delta, lattice_basis_of, lll_reduce, IntegerBasis, LatticeError,
    ModPoint,
};
use crate::numeric::{ln_biguint, rational_isqrt_floor};
use crate::numtheory::{is_probable_prime, mod_inverse, two_squares, TwoSquaresOutcome};

/// Errors of problem construction and of the height search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiftError {
    /// A modulus or lifting prime failed the primality requirement.
    NotPrime,
    /// The lifting prime equals the sphere modulus.
    SamePrime,
    /// The residue vector has fewer than two entries (dimension below 3).
    BadLength,
    /// Every residue entry vanishes mod q, so no pivot exists.
    NoPivot,
    /// `gcd(N, q) != 1` or the residue norm does not match `N` mod q.
    IncompatibleNorm,
    /// The box-bound hypothesis `2m|w_i| < M` fails at (0-based) index i.
    HypothesisFailed(usize),
    /// The residue vector is not a unit multiple of the point mod q.
    MismatchedPoint,
    /// Exact mode ran out of budget at height `h` before certifying it.
    Undecided { h: u32 },
    /// No lift was found up to the height cap; per-height statuses attached.
    NotFound { attempts: Vec<(u32, SearchStatus)> },
    /// Propagated lattice-layer error.
    Lattice(LatticeError),
}

impl fmt::Display for LiftError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiftError::NotPrime => write!(f, "modulus and lifting prime must be prime"),
            LiftError::SamePrime => write!(f, "lifting prime must differ from the modulus"),
            LiftError::BadLength => write!(f, "residue vector needs at least two entries"),
            LiftError::NoPivot => write!(f, "all residue entries vanish mod q"),
            LiftError::IncompatibleNorm => {
                write!(f, "target norm must be coprime to q and match the residue norm mod q")
            }
            LiftError::HypothesisFailed(i) => {
                write!(f, "box hypothesis 2m|w_i| < M fails at index {i}")
            }
            LiftError::MismatchedPoint => {
                write!(f, "residue vector is not a unit multiple of the point mod q")
            }
            LiftError::Undecided { h } => {
                write!(f, "budget exhausted at height {h} before exact certification")
            }
            LiftError::NotFound { attempts } => {
                write!(f, "no lift found within the height cap ({} heights tried)", attempts.len())
            }
            LiftError::Lattice(e) => write!(f, "lattice error: {e}"),
        }
    }
}

impl std::error::Error for LiftError {}

impl From<LatticeError> for LiftError {
    fn from(e: LatticeError) -> Self {
        LiftError::Lattice(e)
    }
}

/// Search discipline: `Exact` refuses uncertified answers, `Heuristic`
/// skips budget-limited candidates and keeps going.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    /// Every `NoSolution` is a proof; budget exhaustion aborts the height
    /// scan with [`LiftError::Undecided`].
    Exact,
    /// Budget exhaustion at a height just moves on to the next height.
    Heuristic,
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchMode::Exact => write!(f, "exact"),
            SearchMode::Heuristic => write!(f, "heuristic"),
        }
    }
}

/// Work limits for the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    /// Maximum number of candidate values handed to the two-square test
    /// per height.
    pub candidate_budget: u64,
    /// Pollard-rho step budget per two-square factorization.
    pub factor_budget: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            candidate_budget: 20_000,
            factor_budget: 1 << 15,
        }
    }
}

/// Result of one fixed-height search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchStatus {
    /// A solution vector `t` of length `d+1`; it satisfies
    /// `sum (q t_i + b_i)^2 + (q t_{d-1})^2 + (q t_d)^2 = N` exactly.
    Found(Vec<BigInt>),
    /// Certified: no solution exists at this height (exhaustive coverage
    /// with every residual value decided).
    NoSolution,
    /// The search stopped early or skipped undecidable residuals.
    BudgetExhausted,
}

/// A fixed-height search outcome with bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    /// Tri-state search result.
    pub status: SearchStatus,
    /// Number of residual values handed to the two-square test.
    pub candidates_tested: u64,
    /// The discipline the search ran under.
    pub mode: SearchMode,
}

/// A fixed-norm lifting instance: find integer `t` with
/// `|q t + b|^2 + (q t_{d-1})^2 + (q t_d)^2 = N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftProblem {
    q: BigUint,
    n: BigUint,
    b: Vec<BigInt>,
}

impl LiftProblem {
    /// Validates an instance: `q` an odd prime, at least two residue
    /// entries (reduced into `[0, q)`), a nonzero entry mod q, and
    /// `gcd(N, q) = 1` with `sum b_i^2 = N (mod q)`.
    pub fn new(q: BigUint, n: BigUint, b: Vec<BigInt>) -> Result<LiftProblem, LiftError> {
        if q < BigUint::from(3u32) || (&q % 2u32).is_zero() || !is_probable_prime(&q) {
            return Err(LiftError::NotPrime);
        }
        if b.len() < 2 {
            return Err(LiftError::BadLength);
        }
        let qi = BigInt::from(q.clone());
        let b: Vec<BigInt> = b.iter().map(|x| x.mod_floor(&qi)).collect();
        if b.iter().all(|x| x.is_zero()) {
            return Err(LiftError::NoPivot);
        }
        if n.gcd(&q) != BigUint::one() {
            return Err(LiftError::IncompatibleNorm);
        }
        let norm: BigInt = b.iter().map(|x| x * x).sum();
        if (BigInt::from(n.clone()) - norm).mod_floor(&qi) != BigInt::zero() {
            return Err(LiftError::IncompatibleNorm);
        }
        Ok(LiftProblem { q, n, b })
    }

    /// The sphere modulus.
    pub fn q(&self) -> &BigUint {
        &self.q
    }

    /// The target norm `N`.
    pub fn n(&self) -> &BigUint {
        &self.n
    }

    /// The residue vector, entries in `[0, q)`.
    pub fn b(&self) -> &[BigInt] {
        &self.b
    }

    /// The sphere dimension `d` (the residue vector has `d-1` entries).
    pub fn d(&self) -> usize {
        self.b.len() + 1
    }
}

/// A lift of a sphere point: `s = n / p^h` with `|n|^2 = p^{2h}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicLift {
    /// The lifting prime (`p != q`).
    pub p: BigUint,
    /// The height exponent; the denominator of the lift is `p^h`.
    pub h: u32,
    /// Integer coordinates, `|n|^2 = p^{2h}` exactly.
    pub n: Vec<BigInt>,
}

impl PadicLift {
    /// Checks all lift invariants against the originating point: the norm
    /// identity, the congruence `n_i = p^h a_i (mod q)` for every
    /// coordinate, and height-reducedness (`h > 0` implies some `n_i` is
    /// not divisible by `p`).
    pub fn verify(&self, a: &ModPoint) -> bool {
        if self.n.len() != a.coords().len() {
            return false;
        }
        let norm: BigInt = self.n.iter().map(|x| x * x).sum();
        if norm != BigInt::from(self.p.pow(2 * self.h)) {
            return false;
        }
        let q = a.q();
        let qi = BigInt::from(q.clone());
        let ph = BigInt::from(self.p.modpow(&BigUint::from(self.h), q));
        for (ni, ai) in self.n.iter().zip(a.coords()) {
            if (ni - &ph * BigInt::from(ai.clone())).mod_floor(&qi) != BigInt::zero() {
                return false;
            }
        }
        if self.h > 0 {
            let pi = BigInt::from(self.p.clone());
            if self.n.iter().all(|x| x.mod_floor(&pi).is_zero()) {
                return false;
            }
        }
        true
    }
}

/// A successful minimal-height search.
#[derive(Debug, Clone)]
pub struct MinimalLift {
    /// The lift realizing the minimal height.
    pub lift: PadicLift,
    /// The minimal height found.
    pub h_min: u32,
    /// True when every height below `h_min` was certified unsolvable.
    pub certified_minimal: bool,
    /// Per-height search statuses in the order tried.
    pub attempts: Vec<(u32, SearchStatus)>,
    /// Total residual values handed to the two-square test, all heights.
    pub candidates_tested: u64,
}

/// The box confining all solutions once every basis vector is short:
/// half-widths `A_i = M/(m |w_i|) - 1/2` around fractional offsets, with
/// the guarantee that the residual form is non-negative on the box and
/// negative outside `scale` times the box.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    /// Number of free coordinates.
    pub m: usize,
    /// Per-coordinate half-widths `A_i` (positive).
    pub half_widths: Vec<BigRational>,
    /// Fractional center offsets, `|s_i| <= 1/2`; zero until the caller
    /// installs the offsets of its reduced center.
    pub offsets: Vec<BigRational>,
    /// The blow-up factor `2m (3/sqrt 2)^m` outside which the residual
    /// form is negative.
    pub scale: f64,
}

/// Builds the confining box from the squared basis norms `|w_i|^2` and
/// the squared radius `M^2` (exact hypothesis test `(2m)^2 |w_i|^2 < M^2`
/// on rationals; half-widths evaluated in double precision).
///
/// Fails with [`LiftError::HypothesisFailed`] at the first index whose
/// vector is too long, which signals the caller to branch on that
/// coordinate instead.
pub fn compute_box(norms_sq: &[BigRational], m_sq: &BigRational) -> Result<SearchBox, LiftError> {
    let m = norms_sq.len();
    assert!(m > 0, "box needs at least one coordinate");
    let four_m_sq = BigRational::from_integer(BigInt::from(4 * (m * m) as u64));
    for (i, w_sq) in norms_sq.iter().enumerate() {
        if &four_m_sq * w_sq >= *m_sq {
            return Err(LiftError::HypothesisFailed(i));
        }
    }
    let m_f = crate::numeric::rational_to_f64(m_sq).sqrt();
    let half_widths = norms_sq
        .iter()
        .map(|w_sq| {
            let w = crate::numeric::rational_to_f64(w_sq).sqrt();
            let a = m_f / (m as f64 * w) - 0.5;
            BigRational::from_float(a).expect("half-width is finite")
        })
        .collect();
    Ok(SearchBox {
        m,
        half_widths,
        offsets: vec![BigRational::zero(); m],
        scale: 2.0 * m as f64 * (3.0 / 2f64.sqrt()).powi(m as i32),
    })
}

/// The exhaustive enumeration range for a coordinate whose basis vector
/// is long (`alpha |w_k| > M`): any solution has `|x_k|` at most
/// `alpha (3/sqrt 2)^m + 1`; returns the floor of that bound.
pub fn bounded_coordinate_range(m: usize, alpha: f64) -> u64 {
    (alpha * (3.0 / 2f64.sqrt()).powi(m as i32) + 1.0).floor() as u64
}

/// Builds the residue instance of a point at height `h`: `N = p^{2h}` and
/// `b_i = p^h a_i mod q`.  The instance invariants hold by construction.
pub fn make_problem(a: &ModPoint, p: &BigUint, h: u32) -> Result<LiftProblem, LiftError> {
    if !is_probable_prime(p) {
        return Err(LiftError::NotPrime);
    }
    if p == a.q() {
        return Err(LiftError::SamePrime);
    }
    Ok(problem_at_height(a, p, h))
}

fn problem_at_height(a: &ModPoint, p: &BigUint, h: u32) -> LiftProblem {
    let q = a.q().clone();
    let ph = p.modpow(&BigUint::from(h), &q);
    let b: Vec<BigInt> = a
        .active()
        .iter()
        .map(|ai| BigInt::from((ai * &ph) % &q))
        .collect();
    let n = p.pow(2 * h);
    // Invariants hold by construction (p is a unit mod q and the point is
    // on the sphere), so skip the per-call validation of `new`.
    debug_assert!(LiftProblem::new(q.clone(), n.clone(), b.clone()).is_ok());
    LiftProblem { q, n, b }
}

/// Solves the congruence `2 <b, t> = k (mod q)`, `k = (N - |b|^2)/q`, by
/// placing `k (2 b_piv)^{-1} mod q` at the first pivot coordinate.
pub fn solve_condition2(prob: &LiftProblem) -> Vec<BigInt> {
    let qi = BigInt::from(prob.q.clone());
    let norm: BigInt = prob.b.iter().map(|x| x * x).sum();
    let k = (BigInt::from(prob.n.clone()) - norm) / &qi;
    let piv = prob
        .b
        .iter()
        .position(|x| !x.is_zero())
        .expect("problem invariant guarantees a pivot");
    let inv = mod_inverse(&(&prob.b[piv] * 2), &prob.q).expect("2 b_piv is a unit mod odd prime");
    let mut t0 = vec![BigInt::zero(); prob.b.len()];
    t0[piv] = (k * BigInt::from(inv)).mod_floor(&qi);
    t0
}

/// The fully-prepared search form of an instance: a reduced lattice
/// basis, the fractionally-reduced rational center, and an exact integer
/// evaluator for the residual `F`.
#[derive(Debug, Clone)]
pub struct LiftForm {
    basis: IntegerBasis,
    /// Gram-Schmidt data of `basis`, cached so height scans that reuse
    /// one reduced basis do not repeat the exact orthogonalization.
    gs: SubGs,
    /// `t_base + b/q`: the rational center of the solution ellipsoid.
    offset: Vec<BigRational>,
    /// Basis coefficients of the center's in-span part, `|r_i| <= 1/2`.
    coeffs: Vec<BigRational>,
    /// Integer translation: solutions are `t = t_base + sum x_i u_i`.
    t_base: Vec<BigInt>,
    q: BigUint,
    n: BigUint,
    b: Vec<BigInt>,
}

impl LiftForm {
    /// The reduced lattice basis `{u_i}`.
    pub fn basis(&self) -> &IntegerBasis {
        &self.basis
    }

    /// The reduced rational center `t_base + b/q`.
    pub fn offset(&self) -> &[BigRational] {
        &self.offset
    }

    /// Basis coefficients of the center's in-span component.
    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// The integer translation applied to lattice coordinates.
    pub fn t_base(&self) -> &[BigInt] {
        &self.t_base
    }

    /// Maps lattice coordinates `x` to the shifted solution vector `t`.
    pub fn t_of(&self, x: &[BigInt]) -> Vec<BigInt> {
        let mut t = self.t_base.clone();
        for (xi, row) in x.iter().zip(self.basis.rows()) {
            for (tj, rj) in t.iter_mut().zip(row) {
                *tj += xi * rj;
            }
        }
        t
    }

    /// Exact residual `F(x) = (N - |q t(x) + b|^2) / q^2`; the division
    /// is exact for every integer `x` by the congruence construction.
    pub fn eval(&self, x: &[BigInt]) -> BigInt {
        let t = self.t_of(x);
        let qi = BigInt::from(self.q.clone());
        let norm: BigInt = t
            .iter()
            .zip(&self.b)
            .map(|(ti, bi)| {
                let v = &qi * ti + bi;
                &v * &v
            })
            .sum();
        let (f, rem) = (BigInt::from(self.n.clone()) - norm).div_rem(&(&qi * &qi));
        assert!(rem.is_zero(), "residual is integral on congruence solutions");
        f
    }
}

fn rat(i: BigInt) -> BigRational {
    BigRational::from_integer(i)
}

fn dot_rat(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gram-Schmidt data of an ordered subset of basis rows (rows are in
/// general fewer than the ambient dimension). Each star vector is also
/// stored with cleared denominators (`star_num[j] / star_den[j]`) so the
/// hot slack test can run in plain integer arithmetic.
#[derive(Debug, Clone)]
struct SubGs {
    star: Vec<Vec<BigRational>>,
    star_num: Vec<Vec<BigInt>>,
    star_den: Vec<BigInt>,
    mu: Vec<Vec<BigRational>>,
    norms_sq: Vec<BigRational>,
}

fn sub_gs(rows: &[&Vec<BigInt>]) -> SubGs {
    let mut star: Vec<Vec<BigRational>> = Vec::with_capacity(rows.len());
    let mut star_num: Vec<Vec<BigInt>> = Vec::with_capacity(rows.len());
    let mut star_den: Vec<BigInt> = Vec::with_capacity(rows.len());
    let mut mu: Vec<Vec<BigRational>> = Vec::with_capacity(rows.len());
    let mut norms_sq: Vec<BigRational> = Vec::with_capacity(rows.len());
    for row in rows {
        let mut v: Vec<BigRational> = row.iter().cloned().map(rat).collect();
        let mut murow = Vec::with_capacity(star.len());
        for (s, b_sq) in star.iter().zip(&norms_sq) {
            let coeff = dot_rat(&v, s) / b_sq;
            for (vc, sc) in v.iter_mut().zip(s) {
                *vc -= &coeff * sc;
            }
            murow.push(coeff);
        }
        let b_sq = dot_rat(&v, &v);
        assert!(!b_sq.is_zero(), "reduced basis rows are independent");
        let mut den = BigInt::one();
        for e in &v {
            den = den.lcm(e.denom());
        }
        star_num.push(v.iter().map(|e| e.numer() * (&den / e.denom())).collect());
        star_den.push(den);
        star.push(v);
        mu.push(murow);
        norms_sq.push(b_sq);
    }
    SubGs {
        star,
        star_num,
        star_den,
        mu,
        norms_sq,
    }
}

/// Prepares the search form for an instance against its originating
/// point: checks that `b` is a unit multiple of the point's coordinate
/// block mod q, LLL-reduces the point's lattice, solves the offset
/// congruence, and fractionally reduces the center.
pub fn build_form(prob: &LiftProblem, a: &ModPoint) -> Result<LiftForm, LiftError> {
    if prob.q() != a.q() || prob.b.len() + 2 != a.coords().len() {
        return Err(LiftError::MismatchedPoint);
    }
    let qi = BigInt::from(prob.q.clone());
    let piv = a
        .active()
        .iter()
        .position(|c| !c.is_zero())
        .expect("sphere point has a unit coordinate");
    let inv = mod_inverse(&BigInt::from(a.active()[piv].clone()), prob.q())
        .expect("pivot is a unit mod prime q");
    let lambda = (&prob.b[piv] * BigInt::from(inv)).mod_floor(&qi);
    for (bi, ai) in prob.b.iter().zip(a.active()) {
        if (bi - &lambda * BigInt::from(ai.clone())).mod_floor(&qi) != BigInt::zero() {
            return Err(LiftError::MismatchedPoint);
        }
    }
    if lambda.is_zero() {
        return Err(LiftError::MismatchedPoint);
    }
    let reduced = lll_reduce(&lattice_basis_of(a), &default_delta())?;
    let gs = sub_gs(&reduced.rows().iter().collect::<Vec<_>>());
    Ok(form_from_parts(prob, reduced, gs))
}

/// Assembles a form from an instance, an LLL-reduced basis of the
/// orthogonality lattice of `b`, and that basis's Gram-Schmidt data
/// (passed in so height scans compute it once per basis).
fn form_from_parts(prob: &LiftProblem, basis: IntegerBasis, gs: SubGs) -> LiftForm {
    let t0 = solve_condition2(prob);
    let qr = rat(BigInt::from(prob.q.clone()));
    let mut offset: Vec<BigRational> = t0
        .iter()
        .zip(&prob.b)
        .map(|(ti, bi)| rat(ti.clone()) + rat(bi.clone()) / &qr)
        .collect();
    let coeffs = span_coefficients(&offset, &gs);
    let mut t_base = t0;
    let mut reduced_coeffs = Vec::with_capacity(coeffs.len());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    for (i, c) in coeffs.into_iter().enumerate() {
        let g = (&c + &half).floor().to_integer();
        if !g.is_zero() {
            for ((oj, tj), rj) in offset.iter_mut().zip(&mut t_base).zip(basis.rows()[i].iter()) {
                *oj -= rat(&g * rj);
                *tj -= &g * rj;
            }
        }
        reduced_coeffs.push(c - rat(g));
    }
    debug_assert!(reduced_coeffs.iter().all(|r| r.abs() <= half));
    LiftForm {
        basis,
        gs,
        offset,
        coeffs: reduced_coeffs,
        t_base,
        q: prob.q.clone(),
        n: prob.n.clone(),
        b: prob.b.clone(),
    }
}

/// Coefficients of the in-span component of `v` with respect to the rows
/// underlying `gs`: back-substitution through the Gram-Schmidt triangle.
fn span_coefficients(v: &[BigRational], gs: &SubGs) -> Vec<BigRational> {
    let m = gs.star.len();
    let gamma: Vec<BigRational> = (0..m)
        .map(|j| dot_rat(v, &gs.star[j]) / &gs.norms_sq[j])
        .collect();
    let mut c = vec![BigRational::zero(); m];
    for j in (0..m).rev() {
        let mut acc = gamma[j].clone();
        for i in j + 1..m {
            acc -= &c[i] * &gs.mu[i][j];
        }
        c[j] = acc;
    }
    c
}

struct SearchCtx<'a> {
    form: &'a LiftForm,
    budgets: Budgets,
    /// `N / q^2`, the squared radius of the full solution ellipsoid.
    radius_sq: BigRational,
    tested: u64,
    aborted: bool,
}

impl SearchCtx<'_> {
    /// Final arbiter for one candidate: counts it, runs the two-square
    /// test on the residual `f`, and converts the outcome to a status.
    fn decide(&mut self, t_active: Vec<BigInt>, f: BigInt) -> SearchStatus {
        if f.is_negative() {
            return SearchStatus::NoSolution;
        }
        self.tested += 1;
        if self.tested > self.budgets.candidate_budget {
            self.aborted = true;
            return SearchStatus::BudgetExhausted;
        }
        match two_squares(f.magnitude(), self.budgets.factor_budget) {
            TwoSquaresOutcome::Representable(ts) => {
                let mut t = t_active;
                t.push(BigInt::from(ts.y));
                t.push(BigInt::from(ts.x));
                SearchStatus::Found(t)
            }
            TwoSquaresOutcome::NotRepresentable => SearchStatus::NoSolution,
            TwoSquaresOutcome::Unknown => SearchStatus::BudgetExhausted,
        }
    }

    /// Converts a rational point on the shifted lattice back to `t` and
    /// its exact residual, then decides it.
    fn decide_point(&mut self, v: &[BigRational]) -> SearchStatus {
        let qr = rat(BigInt::from(self.form.q.clone()));
        let t: Vec<BigInt> = v
            .iter()
            .zip(&self.form.b)
            .map(|(vi, bi)| {
                let ti = vi - rat(bi.clone()) / &qr;
                debug_assert!(ti.is_integer(), "offset stays on the integer shift");
                ti.to_integer()
            })
            .collect();
        let f_rat = &self.radius_sq - dot_rat(v, v);
        debug_assert!(f_rat.is_integer(), "residual is integral on congruence solutions");
        self.decide(t, f_rat.to_integer())
    }
}

/// One node of the recursive search: `v` is the current rational center,
/// `active` indexes the still-free basis rows, `gs` is their
/// orthogonalization.
fn search_node(
    ctx: &mut SearchCtx<'_>,
    v: Vec<BigRational>,
    active: &[usize],
    gs: &SubGs,
) -> SearchStatus {
    if active.is_empty() {
        return ctx.decide_point(&v);
    }
    let m = active.len();

    // Orthogonal split of the center against the active span, done with
    // cleared denominators: with w = vden*v and S_j = sden_j*star_j all
    // integer, <v, star_j> = <w, S_j>/(vden*sden_j), the Pythagorean
    // identity |v_perp|^2 = |v|^2 - sum_j <v, star_j>^2 / B_j turns the
    // sign of slack = radius^2 - |v_perp|^2 into the sign of an integer.
    // Rational normalization (a gcd per operation) is what dominates a
    // height scan otherwise; integer products are cheap.
    let mut vden = BigInt::one();
    for e in &v {
        vden = vden.lcm(e.denom());
    }
    let w: Vec<BigInt> = v.iter().map(|e| e.numer() * (&vden / e.denom())).collect();
    let dots_int: Vec<BigInt> = gs.star_num[..m]
        .iter()
        .map(|s| w.iter().zip(s).map(|(a, b)| a * b).sum())
        .collect();
    // scale_j = sden_j^2 * numer(B_j) > 0; common positive denominator of
    // the slack is rd * vden^2 * prod_j scale_j.
    let scales: Vec<BigInt> = (0..m)
        .map(|j| &gs.star_den[j] * &gs.star_den[j] * gs.norms_sq[j].numer())
        .collect();
    let mut p_all = BigInt::one();
    for s in &scales {
        p_all *= s;
    }
    let vden_sq = &vden * &vden;
    let w_sq: BigInt = w.iter().map(|a| a * a).sum();
    let rn = ctx.radius_sq.numer();
    let rd = ctx.radius_sq.denom();
    let mut slack_num = rn * &vden_sq * &p_all - &w_sq * rd * &p_all;
    for j in 0..m {
        let p_over = &p_all / &scales[j];
        slack_num += rd * &dots_int[j] * &dots_int[j] * gs.norms_sq[j].denom() * p_over;
    }
    if slack_num.is_negative() {
        return SearchStatus::NoSolution;
    }
    let slack = BigRational::new(slack_num, rd * vden_sq * p_all);
    let gamma: Vec<BigRational> = (0..m)
        .map(|j| {
            BigRational::new(
                &dots_int[j] * gs.norms_sq[j].denom(),
                &vden * &gs.star_den[j] * gs.norms_sq[j].numer(),
            )
        })
        .collect();

    // Fractional reduction of the in-span component.
    let mut c = vec![BigRational::zero(); m];
    for j in (0..m).rev() {
        let mut acc = gamma[j].clone();
        for i in j + 1..m {
            acc -= &c[i] * &gs.mu[i][j];
        }
        c[j] = acc;
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut v = v;
    for (j, cj) in c.iter_mut().enumerate() {
        let g = (&*cj + &half).floor().to_integer();
        if !g.is_zero() {
            let row = &ctx.form.basis.rows()[active[j]];
            for (vc, rc) in v.iter_mut().zip(row) {
                *vc -= rat(&g * rc);
            }
            *cj -= rat(g);
        }
    }

    let norms_sq: Vec<BigRational> = active
        .iter()
        .map(|&i| rat(BigInt::from(ctx.form.basis.norm_sq(i))))
        .collect();
    match compute_box(&norms_sq, &slack) {
        Ok(mut private_box) => {
            private_box.offsets = c.clone();
            let size: f64 = private_box
                .half_widths
                .iter()
                .map(|a| 2.0 * crate::numeric::rational_to_f64(a) + 1.0)
                .product();
            if size <= ctx.budgets.candidate_budget as f64 {
                enumerate_ellipsoid(ctx, &v, active, gs, &c, &slack)
            } else {
                enumerate_shells(ctx, &v, active, &c, &private_box)
            }
        }
        Err(LiftError::HypothesisFailed(_)) => {
            // Branch on the longest active vector; by maximality its norm
            // violates the hypothesis, so the line bound applies with
            // alpha = 2m.
            let k = (0..m)
                .max_by(|&i, &j| norms_sq[i].cmp(&norms_sq[j]))
                .expect("nonempty active set");
            let range = bounded_coordinate_range(m, 2.0 * m as f64) as i64;
            let child_active: Vec<usize> = active
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, &i)| i)
                .collect();
            let child_rows: Vec<&Vec<BigInt>> = child_active
                .iter()
                .map(|&i| &ctx.form.basis.rows()[i])
                .collect();
            let child_gs = sub_gs(&child_rows);
            let row_k: Vec<BigInt> = ctx.form.basis.rows()[active[k]].clone();
            let mut exhausted = false;
            for l in alternating_range(range) {
                if ctx.aborted {
                    return SearchStatus::BudgetExhausted;
                }
                let shifted: Vec<BigRational> = v
                    .iter()
                    .zip(&row_k)
                    .map(|(vc, rc)| vc + rat(BigInt::from(l) * rc))
                    .collect();
                match search_node(ctx, shifted, &child_active, &child_gs) {
                    SearchStatus::Found(t) => return SearchStatus::Found(t),
                    SearchStatus::BudgetExhausted => exhausted = true,
                    SearchStatus::NoSolution => {}
                }
            }
            if exhausted {
                SearchStatus::BudgetExhausted
            } else {
                SearchStatus::NoSolution
            }
        }
        Err(_) => unreachable!("compute_box only fails with HypothesisFailed"),
    }
}

/// `0, 1, -1, 2, -2, ..., r, -r`.
fn alternating_range(r: i64) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=r).flat_map(|l| [l, -l]))
}

/// Exhaustive enumeration of the solution ellipsoid
/// `|v_par + sum x_i u_i|^2 <= slack` by exact Fincke-Pohst descent over
/// the Gram-Schmidt triangle.  Complete coverage: outside the ellipsoid
/// the residual is negative, so a fully-decided pass certifies
/// `NoSolution`.
fn enumerate_ellipsoid(
    ctx: &mut SearchCtx<'_>,
    v: &[BigRational],
    active: &[usize],
    gs: &SubGs,
    center: &[BigRational],
    slack: &BigRational,
) -> SearchStatus {
    let m = active.len();
    // Per-level state: chosen integer x_i builds up v_partial; the
    // quadratic budget shrinks by B_i (x_i + c_i + carry_i)^2.
    struct Frame {
        x: BigInt,
        hi: BigInt,
        budget: BigRational,
        v_partial: Vec<BigRational>,
    }
    let carry = |frames: &[Frame], level: usize, gs: &SubGs, center: &[BigRational]| {
        // carry_level = sum_{j > level} mu[j][level] * (x_j + c_j)
        let mut s = BigRational::zero();
        for (depth, fr) in frames.iter().enumerate() {
            let j = m - 1 - depth;
            s += &gs.mu[j][level] * (rat(fr.x.clone()) + &center[j]);
        }
        s
    };
    let level_of = |depth: usize| m - 1 - depth;

    let mut frames: Vec<Frame> = Vec::with_capacity(m);
    let mut exhausted = false;

    // Opens level `m-1-frames.len()`: computes the x-range and pushes a
    // frame primed one step before its first candidate.
    macro_rules! open_level {
        ($budget:expr, $v_partial:expr) => {{
            let level = level_of(frames.len());
            let centered = &center[level] + carry(&frames, level, gs, center);
            let rho = BigInt::from(rational_isqrt_floor(&($budget.clone() / &gs.norms_sq[level])));
            let lo = (-&centered).ceil().to_integer() - &rho - 1;
            let hi = (-&centered).floor().to_integer() + &rho + 1;
            frames.push(Frame { x: lo - 1, hi, budget: $budget, v_partial: $v_partial });
        }};
    }

    open_level!(slack.clone(), v.to_vec());
    while let Some(frame) = frames.last() {
        if ctx.aborted {
            return SearchStatus::BudgetExhausted;
        }
        if frame.x >= frame.hi {
            frames.pop();
            continue;
        }
        let depth = frames.len() - 1;
        let level = level_of(depth);
        let frame = frames.last_mut().expect("just checked");
        frame.x += 1;
        let x = frame.x.clone();
        let centered = rat(x.clone())
            + &center[level]
            + carry(&frames[..frames.len() - 1], level, gs, center);
        let term = &centered * &centered * &gs.norms_sq[level];
        let frame = frames.last().expect("still open");
        if term > frame.budget {
            continue;
        }
        let rest = &frame.budget - term;
        let row = &ctx.form.basis.rows()[active[level]];
        let mut v_next = frame.v_partial.clone();
        for (vc, rc) in v_next.iter_mut().zip(row) {
            *vc += rat(&x * rc);
        }
        if level == 0 {
            match ctx.decide_point(&v_next) {
                SearchStatus::Found(t) => return SearchStatus::Found(t),
                SearchStatus::BudgetExhausted => exhausted = true,
                SearchStatus::NoSolution => {}
            }
        } else {
            open_level!(rest, v_next);
        }
    }
    if exhausted || ctx.aborted {
        SearchStatus::BudgetExhausted
    } else {
        SearchStatus::NoSolution
    }
}

/// Budgeted scan of the confining box in nondecreasing max-norm shells
/// (ties in ascending lexicographic order).  Incomplete by design: this
/// path never certifies `NoSolution`.
fn enumerate_shells(
    ctx: &mut SearchCtx<'_>,
    v: &[BigRational],
    active: &[usize],
    center: &[BigRational],
    bounds: &SearchBox,
) -> SearchStatus {
    let m = active.len();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    // Beyond this shell radius the box is exhausted.
    let r_max = bounds
        .half_widths
        .iter()
        .map(|a| (a + &half).floor().to_integer() + BigInt::one())
        .max()
        .expect("nonempty box")
        .to_u64()
        .unwrap_or(u64::MAX);
    let in_box = |x: &[i64]| {
        x.iter().enumerate().all(|(i, &xi)| {
            (rat(BigInt::from(xi)) + &center[i]).abs() <= bounds.half_widths[i]
        })
    };
    let mut x = vec![0i64; m];
    let mut r = 0u64;
    loop {
        if r > r_max || ctx.aborted {
            return SearchStatus::BudgetExhausted;
        }
        // Visit all x with max-norm exactly r, lexicographically.
        // Undecided residuals do not stop the scan; this path reports
        // BudgetExhausted at the end regardless.
        let mut found = None;
        visit_shell(&mut x, 0, r as i64, false, &mut |x| {
            if ctx.aborted {
                return false;
            }
            if !in_box(x) {
                return true;
            }
            let mut point = v.to_vec();
            for (j, &xj) in x.iter().enumerate() {
                let row = &ctx.form.basis.rows()[active[j]];
                for (vc, rc) in point.iter_mut().zip(row) {
                    *vc += rat(BigInt::from(xj) * rc);
                }
            }
            match ctx.decide_point(&point) {
                SearchStatus::Found(t) => {
                    found = Some(t);
                    false
                }
                _ => true,
            }
        });
        if let Some(t) = found {
            return SearchStatus::Found(t);
        }
        r += 1;
    }
}

/// Recursively visits every `x` with `max |x_i| = r` in ascending
/// lexicographic order.  The callback returns `false` to stop the walk.
fn visit_shell(
    x: &mut Vec<i64>,
    pos: usize,
    r: i64,
    saturated: bool,
    f: &mut impl FnMut(&[i64]) -> bool,
) -> bool {
    if pos == x.len() {
        return !saturated || f(x);
    }
    for xi in -r..=r {
        x[pos] = xi;
        let sat = saturated || xi.abs() == r;
        // The last position must reach |x_i| = r if nothing else did.
        if pos + 1 == x.len() && !sat {
            continue;
        }
        if !visit_shell(x, pos + 1, r, sat, f) {
            return false;
        }
    }
    true
}

fn run_search(form: &LiftForm, mode: SearchMode, budgets: &Budgets) -> SearchOutcome {
    let q_sq = BigInt::from(form.q.clone()).pow(2);
    let mut ctx = SearchCtx {
        form,
        budgets: *budgets,
        radius_sq: BigRational::new(BigInt::from(form.n.clone()), q_sq),
        tested: 0,
        aborted: false,
    };
    let active: Vec<usize> = (0..form.basis.rank()).collect();
    let status = search_node(&mut ctx, form.offset.to_vec(), &active, &form.gs);
    SearchOutcome {
        status,
        candidates_tested: ctx.tested,
        mode,
    }
}

/// Fixed-height search for the instance of a point: builds the form
/// (validating that `b` matches the point) and runs the recursion.
///
/// `Found(t)` satisfies the norm identity exactly; `NoSolution` is a
/// certificate (exhaustive coverage with every residual decided);
/// `BudgetExhausted` is inconclusive.
pub fn int_lift(
    prob: &LiftProblem,
    a: &ModPoint,
    mode: SearchMode,
    budgets: &Budgets,
) -> Result<SearchOutcome, LiftError> {
    let form = build_form(prob, a)?;
    Ok(run_search(&form, mode, budgets))
}

/// Fixed-height search for a standalone instance: the lattice is built
/// from the direction of `b` itself (for instances, unlike [`int_lift`],
/// that do not come from a sphere point).
pub fn solve_lift_problem(
    prob: &LiftProblem,
    mode: SearchMode,
    budgets: &Budgets,
) -> Result<SearchOutcome, LiftError> {
    let active: Vec<BigUint> = prob
        .b
        .iter()
        .map(|x| x.to_biguint().expect("entries reduced into [0, q)"))
        .collect();
    let basis = basis_from_active(prob.q(), &active)?;
    let reduced = lll_reduce(&basis, &default_delta())?;
    let gs = sub_gs(&reduced.rows().iter().collect::<Vec<_>>());
    Ok(run_search(&form_from_parts(prob, reduced, gs), mode, budgets))
}

/// Scans heights `h = 0, 1, ...` up to `ceil(h_max_factor * log_p q)`
/// and returns the first solvable one, assembled into a verified
/// [`PadicLift`].
///
/// In exact mode the returned height is certified minimal (any
/// inconclusive height aborts with [`LiftError::Undecided`]); in
/// heuristic mode `certified_minimal` records whether every earlier
/// height was still certified unsolvable.
pub fn minimal_lift(
    a: &ModPoint,
    p: &BigUint,
    mode: SearchMode,
    budgets: &Budgets,
    h_max_factor: f64,
) -> Result<MinimalLift, LiftError> {
    if !is_probable_prime(p) {
        return Err(LiftError::NotPrime);
    }
    if p == a.q() {
        return Err(LiftError::SamePrime);
    }
    let reduced = lll_reduce(&lattice_basis_of(a), &default_delta())?;
    let gs = sub_gs(&reduced.rows().iter().collect::<Vec<_>>());
    let h_cap = (h_max_factor * ln_biguint(a.q()) / ln_biguint(p)).ceil() as u32;
    let mut attempts: Vec<(u32, SearchStatus)> = Vec::new();
    let mut total = 0u64;
    for h in 0..=h_cap {
        let prob = problem_at_height(a, p, h);
        let form = form_from_parts(&prob, reduced.clone(), gs.clone());
        let outcome = run_search(&form, mode, budgets);
        total += outcome.candidates_tested;
        match outcome.status {
            SearchStatus::Found(t) => {
                let qi = BigInt::from(a.q().clone());
                let d = a.d();
                let mut n: Vec<BigInt> = Vec::with_capacity(d + 1);
                for i in 0..d - 1 {
                    n.push(&qi * &t[i] + &prob.b[i]);
                }
                n.push(&qi * &t[d - 1]);
                n.push(&qi * &t[d]);
                let certified = attempts
                    .iter()
                    .all(|(_, s)| matches!(s, SearchStatus::NoSolution));
                attempts.push((h, SearchStatus::Found(t)));
                // Strip any residual common p-power so the height is
                // reduced; with certified lower heights this never fires.
                let mut h_red = h;
                let pi = BigInt::from(p.clone());
                while h_red > 0 && n.iter().all(|x| x.mod_floor(&pi).is_zero()) {
                    for x in n.iter_mut() {
                        *x /= &pi;
                    }
                    h_red -= 1;
                }
                debug_assert!(!(certified && h_red != h), "certified heights cannot reduce");
                let lift = PadicLift {
                    p: p.clone(),
                    h: h_red,
                    n,
                };
                debug_assert!(lift.verify(a));
                return Ok(MinimalLift {
                    lift,
                    h_min: h_red,
                    certified_minimal: certified,
                    attempts,
                    candidates_tested: total,
                });
            }
            SearchStatus::NoSolution => {
                attempts.push((h, SearchStatus::NoSolution));
            }
            SearchStatus::BudgetExhausted => {
                if mode == SearchMode::Exact {
                    return Err(LiftError::Undecided { h });
                }
                attempts.push((h, SearchStatus::BudgetExhausted));
            }
        }
    }
    Err(LiftError::NotFound { attempts })
}

/// The height exponent of a lift on the `log_q` scale:
/// `((d-1)/d) * h * ln p / ln q`.
pub fn wp_exponent(lift: &PadicLift, q: &BigUint, d: usize) -> f64 {
    debug_assert_eq!(d + 1, lift.n.len());
    let ratio = (d as f64 - 1.0) / d as f64;
    ratio * lift.h as f64 * ln_biguint(&lift.p) / ln_biguint(q)
}
