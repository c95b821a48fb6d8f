//! Modular and multiplicative number theory primitives.
//!
//! Everything downstream — lattice construction, the lift search, the
//! samplers — reduces to a handful of classical routines collected here:
//! modular inverses, Miller-Rabin primality, budgeted factorization
//! (trial division plus Brent's variant of Pollard rho), Tonelli-Shanks
//! square roots modulo a prime, and sums of two squares via Cornacchia's
//! descent composed through Gaussian integers.
//!
//! Factoring is the one genuinely unbounded step, so [`factorize`] takes an
//! explicit step budget and reports honestly when it is exhausted: the
//! returned [`Factorization`] keeps the unfactored composite cofactor as a
//! pseudo-factor and clears its `complete` flag.  [`two_squares`] threads
//! that uncertainty through as a three-way outcome instead of guessing.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Trial-division bound used by [`factorize`] before switching to rho.
const TRIAL_BOUND: u32 = 10_000;

/// Deterministic Miller-Rabin witnesses, sufficient for all `n < 2^64`.
const SMALL_WITNESSES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Number of pseudorandom witnesses used for inputs of 65+ bits.
const LARGE_WITNESS_ROUNDS: usize = 64;

/// A (possibly partial) prime factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    /// The factored integer (`>= 1`).
    pub n: BigUint,
    /// `(factor, exponent)` pairs with strictly increasing factors.  All
    /// entries are prime when `complete` is true; otherwise the composite
    /// cofactors left behind by an exhausted budget appear as entries too.
    pub factors: Vec<(BigUint, u32)>,
    /// False when the factoring budget ran out before all entries were
    /// reduced to primes.
    pub complete: bool,
}

impl Factorization {
    /// Multiplies the entries back together (pseudo-factors included).
    pub fn product(&self) -> BigUint {
        let mut acc = BigUint::one();
        for (p, e) in &self.factors {
            acc *= p.pow(*e);
        }
        acc
    }
}

/// A representation `n = x^2 + y^2` with `0 <= x <= y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoSquares {
    pub x: BigUint,
    pub y: BigUint,
    pub n: BigUint,
}

impl TwoSquares {
    fn new(x: BigUint, y: BigUint, n: BigUint) -> Self {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        debug_assert_eq!(&x * &x + &y * &y, n);
        TwoSquares { x, y, n }
    }
}

/// Outcome of [`two_squares`]: decided positively, decided negatively, or
/// undecidable within the factoring budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TwoSquaresOutcome {
    Representable(TwoSquares),
    NotRepresentable,
    Unknown,
}

/// Error returned by [`mod_inverse`] when the element is not a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotInvertible;

impl fmt::Display for NotInvertible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "element shares a factor with the modulus")
    }
}

impl std::error::Error for NotInvertible {}

/// Error returned by [`two_squares_prime`] for primes `p = 3 (mod 4)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadResidue;

impl fmt::Display for BadResidue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "prime is 3 mod 4, so it is not a sum of two squares")
    }
}

impl std::error::Error for BadResidue {}

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_BOUND as usize;
        let mut is_comp = vec![false; n + 1];
        let mut primes = Vec::new();
        for i in 2..=n {
            if !is_comp[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j <= n {
                    is_comp[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

/// Inverse of `x` modulo `modulus`, normalized into `[1, modulus-1]`.
///
/// `x` may be any integer (negative values are reduced first).  Fails with
/// [`NotInvertible`] when `gcd(x, modulus) != 1`.
pub fn mod_inverse(x: &BigInt, modulus: &BigUint) -> Result<BigUint, NotInvertible> {
    assert!(*modulus >= BigUint::from(2u32), "modulus must be at least 2");
    let m = BigInt::from(modulus.clone());
    let xr = x.mod_floor(&m);
    let ext = xr.extended_gcd(&m);
    if !ext.gcd.is_one() {
        return Err(NotInvertible);
    }
    let inv = ext.x.mod_floor(&m);
    Ok(inv.to_biguint().expect("mod_floor yields non-negative"))
}

/// Centered representative of `x` modulo odd `q`: the unique integer
/// congruent to `x` with absolute value at most `(q-1)/2`.
pub fn centered_mod(x: &BigInt, q: &BigUint) -> BigInt {
    let qb = BigInt::from(q.clone());
    let r = x.mod_floor(&qb);
    if &r * 2 > &qb - BigInt::one() {
        r - qb
    } else {
        r
    }
}

fn miller_rabin_witness(n: &BigUint, n_minus_1: &BigUint, d: &BigUint, s: u64, a: &BigUint) -> bool {
    // Returns true when `a` certifies n composite.
    let mut x = a.modpow(d, n);
    if x.is_one() || x == *n_minus_1 {
        return false;
    }
    for _ in 1..s {
        x = &x * &x % n;
        if x == *n_minus_1 {
            return false;
        }
    }
    true
}

/// Miller-Rabin primality test.
///
/// Deterministic (via the 12 fixed witnesses) for `n < 2^64`; larger inputs
/// get 64 witnesses drawn from a ChaCha stream keyed by `n` itself, so the
/// result is still a pure function of `n`, with error probability below
/// `4^-64` for composites.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in &SMALL_WITNESSES {
        let pb = BigUint::from(p);
        if *n == pb {
            return true;
        }
        if (n % pb).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().expect("n-1 > 0");
    let d = &n_minus_1 >> s;
    if n.bits() <= 64 {
        return !SMALL_WITNESSES
            .iter()
            .any(|&a| miller_rabin_witness(n, &n_minus_1, &d, s, &BigUint::from(a)));
    }
    let mut seed = 0x9E37_79B9_7F4A_7C15u64;
    for limb in n.iter_u64_digits().take(4) {
        seed = seed.rotate_left(27) ^ limb;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = n - 3u32; // witnesses in [2, n-2]
    for _ in 0..LARGE_WITNESS_ROUNDS {
        let a = rng.gen_biguint_below(&span) + 2u32;
        if miller_rabin_witness(n, &n_minus_1, &d, s, &a) {
            return false;
        }
    }
    true
}

/// One Brent-rho cycle with polynomial `x^2 + c`; returns a proper factor
/// if one is found before `budget` squarings, along with the steps spent.
fn brent_cycle(n: &BigUint, c: u64, budget: u64) -> (Option<BigUint>, u64) {
    let cb = BigUint::from(c);
    let one = BigUint::one();
    let mut steps = 0u64;
    let mut y = BigUint::from(2u32);
    let mut r = 1u64;
    let mut q = BigUint::one();
    let mut x;
    let batch = 128u64;
    loop {
        x = y.clone();
        for _ in 0..r {
            y = (&y * &y + &cb) % n;
        }
        steps += r;
        let mut k = 0u64;
        while k < r {
            let lim = batch.min(r - k);
            let mut ys = y.clone();
            for _ in 0..lim {
                y = (&y * &y + &cb) % n;
                let diff = if x > y { &x - &y } else { &y - &x };
                q = &q * &diff % n;
            }
            steps += lim;
            let g = q.gcd(n);
            if g > one {
                if g < *n {
                    return (Some(g), steps);
                }
                // The batch overshot: replay it one gcd at a time.
                loop {
                    ys = (&ys * &ys + &cb) % n;
                    steps += 1;
                    let diff = if x > ys { &x - &ys } else { &ys - &x };
                    let g = diff.gcd(n);
                    if g > one {
                        let found = if g < *n { Some(g) } else { None };
                        return (found, steps);
                    }
                    if steps >= budget {
                        return (None, steps);
                    }
                }
            }
            k += lim;
            if steps >= budget {
                return (None, steps);
            }
        }
        r *= 2;
        if steps >= budget {
            return (None, steps);
        }
    }
}

fn pollard_rho(n: &BigUint, budget: u64) -> (Option<BigUint>, u64) {
    // Pre: n odd composite, not divisible by small primes.
    let mut spent = 0u64;
    let mut c = 1u64;
    while spent < budget {
        let (found, used) = brent_cycle(n, c, budget - spent);
        spent += used;
        if let Some(f) = found {
            return (Some(f), spent);
        }
        c += 1;
    }
    (None, spent)
}

/// Factors `n >= 1` by trial division below 10^4 followed by Brent-rho,
/// spending at most `budget` rho squarings in total.
///
/// Exhausting the budget never loses information: the remaining composite
/// cofactors are kept as entries and `complete` is set to false, so the
/// product of all entries always equals `n`.
pub fn factorize(n: &BigUint, budget: u64) -> Factorization {
    assert!(!n.is_zero(), "factorize requires n >= 1");
    let mut map: std::collections::BTreeMap<BigUint, u32> = Default::default();
    let mut complete = true;
    let mut m = n.clone();
    for &p in small_primes() {
        if m.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        if &pb * &pb > m {
            // The remaining cofactor is prime.
            *map.entry(m.clone()).or_insert(0) += 1;
            m = BigUint::one();
            break;
        }
        let mut e = 0u32;
        loop {
            let (quot, rem) = m.div_rem(&pb);
            if rem.is_zero() {
                m = quot;
                e += 1;
            } else {
                break;
            }
        }
        if e > 0 {
            map.insert(pb, e);
        }
    }
    let mut budget_left = budget;
    let mut stack = Vec::new();
    if !m.is_one() {
        stack.push(m);
    }
    while let Some(c) = stack.pop() {
        if is_probable_prime(&c) {
            *map.entry(c).or_insert(0) += 1;
            continue;
        }
        // A perfect square sidesteps rho's worst case for p^2.
        let root = c.sqrt();
        if &root * &root == c {
            stack.push(root.clone());
            stack.push(root);
            continue;
        }
        let (found, used) = pollard_rho(&c, budget_left);
        budget_left = budget_left.saturating_sub(used);
        match found {
            Some(f) => {
                stack.push(&c / &f);
                stack.push(f);
            }
            None => {
                complete = false;
                *map.entry(c).or_insert(0) += 1;
            }
        }
    }
    Factorization {
        n: n.clone(),
        factors: map.into_iter().collect(),
        complete,
    }
}

/// Square root of `a` modulo an odd prime `p` (Tonelli-Shanks), normalized
/// to the root in `[0, (p-1)/2]`.  Returns `None` for non-residues.
pub fn sqrt_mod_p(a: &BigUint, p: &BigUint) -> Option<BigUint> {
    assert!(a < p, "sqrt_mod_p requires 0 <= a < p");
    if a.is_zero() {
        return Some(BigUint::zero());
    }
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if *p == two {
        return Some(a % &two);
    }
    let p_minus_1 = p - &one;
    let half = &p_minus_1 >> 1;
    // Euler's criterion.
    if a.modpow(&half, p) != one {
        return None;
    }
    let root = if (p % 4u32) == BigUint::from(3u32) {
        a.modpow(&((p + &one) >> 2), p)
    } else {
        // Write p - 1 = q * 2^s with q odd.
        let s = p_minus_1.trailing_zeros().expect("p > 1");
        let q = &p_minus_1 >> s;
        // Any quadratic non-residue serves as the generator of the 2-part.
        let mut z = BigUint::from(2u32);
        while z.modpow(&half, p) != p_minus_1 {
            z += 1u32;
        }
        let mut m = s;
        let mut c = z.modpow(&q, p);
        let mut t = a.modpow(&q, p);
        let mut r = a.modpow(&((&q + &one) >> 1), p);
        while !t.is_one() {
            // Smallest i with t^(2^i) = 1.
            let mut i = 0u64;
            let mut t2 = t.clone();
            while !t2.is_one() {
                t2 = &t2 * &t2 % p;
                i += 1;
            }
            let b = c.modpow(&(one.clone() << (m - i - 1)), p);
            m = i;
            c = &b * &b % p;
            t = t * &c % p;
            r = r * b % p;
        }
        r
    };
    let other = p - &root;
    Some(root.min(other))
}

/// Writes a prime as a sum of two squares (Cornacchia's descent).
///
/// `2 = 1^2 + 1^2`; primes `p = 1 (mod 4)` always succeed; primes
/// `p = 3 (mod 4)` fail with [`BadResidue`].
pub fn two_squares_prime(p: &BigUint) -> Result<TwoSquares, BadResidue> {
    debug_assert!(is_probable_prime(p), "two_squares_prime requires a prime");
    let two = BigUint::from(2u32);
    if *p == two {
        return Ok(TwoSquares::new(BigUint::one(), BigUint::one(), two));
    }
    if (p % 4u32) == BigUint::from(3u32) {
        return Err(BadResidue);
    }
    // r^2 = -1 (mod p); descend with the Euclidean algorithm until the
    // first remainder below sqrt(p), which is the smaller square.
    let r = sqrt_mod_p(&(p - 1u32), p).expect("-1 is a residue mod p = 1 (mod 4)");
    let bound = p.sqrt();
    let mut a = p.clone();
    let mut b = r;
    while b > bound {
        let t = &a % &b;
        a = std::mem::replace(&mut b, t);
    }
    let y2 = p - &b * &b;
    let y = y2.sqrt();
    assert_eq!(&y * &y, y2, "Cornacchia descent must close");
    Ok(TwoSquares::new(b, y, p.clone()))
}

#[derive(Clone)]
struct Gaussian(BigInt, BigInt);

impl Gaussian {
    fn mul(&self, other: &Gaussian) -> Gaussian {
        Gaussian(
            &self.0 * &other.0 - &self.1 * &other.1,
            &self.0 * &other.1 + &self.1 * &other.0,
        )
    }

    fn pow(&self, mut e: u32) -> Gaussian {
        let mut base = self.clone();
        let mut acc = Gaussian(BigInt::one(), BigInt::zero());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    fn scale(&self, k: &BigInt) -> Gaussian {
        Gaussian(&self.0 * k, &self.1 * k)
    }
}

/// Decides whether `n` is a sum of two squares, and produces a witness.
///
/// Classification: `n` is representable iff every prime `p = 3 (mod 4)`
/// divides it to an even power.  Decisions are made from the partial
/// factorization wherever it already settles the criterion; when a
/// composite cofactor with odd multiplicity survives the budget and is
/// `1 (mod 4)` the answer is honestly [`TwoSquaresOutcome::Unknown`].
/// (A leftover cofactor that is `3 (mod 4)` must itself contain an
/// odd-power prime `3 (mod 4)`, so that case is still decided.)
pub fn two_squares(n: &BigUint, budget: u64) -> TwoSquaresOutcome {
    if n.is_zero() {
        return TwoSquaresOutcome::Representable(TwoSquares::new(
            BigUint::zero(),
            BigUint::zero(),
            BigUint::zero(),
        ));
    }
    if n.is_one() {
        return TwoSquaresOutcome::Representable(TwoSquares::new(
            BigUint::zero(),
            BigUint::one(),
            BigUint::one(),
        ));
    }
    // Sums of two squares are 0, 1, 2, 4 or 5 mod 8.
    let residue = (n % 8u32).to_u32().expect("small residue");
    if matches!(residue, 3 | 6 | 7) {
        return TwoSquaresOutcome::NotRepresentable;
    }
    let f = factorize(n, budget);
    let three = BigUint::from(3u32);
    let mut unknown = false;
    for (p, e) in &f.factors {
        let certified_prime = f.complete || is_probable_prime(p);
        if certified_prime {
            if p % 4u32 == three && e % 2 == 1 {
                return TwoSquaresOutcome::NotRepresentable;
            }
        } else if e % 2 == 1 {
            if p % 4u32 == three {
                // Odd-multiplicity cofactor with an odd number of
                // odd-power primes 3 mod 4 inside it.
                return TwoSquaresOutcome::NotRepresentable;
            }
            unknown = true;
        }
    }
    if unknown {
        return TwoSquaresOutcome::Unknown;
    }
    let two = BigUint::from(2u32);
    let mut z = Gaussian(BigInt::one(), BigInt::zero());
    for (p, e) in &f.factors {
        let certified_prime = f.complete || is_probable_prime(p);
        if *p == two {
            z = z.mul(&Gaussian(BigInt::one(), BigInt::one()).pow(*e));
        } else if certified_prime && p % 4u32 == BigUint::one() {
            let ts = two_squares_prime(p).expect("p = 1 (mod 4)");
            let factor = Gaussian(BigInt::from(ts.x), BigInt::from(ts.y));
            z = z.mul(&factor.pow(*e));
        } else {
            // Prime 3 mod 4 with even exponent, or an even-multiplicity
            // composite cofactor: contributes a plain square.
            debug_assert!(e % 2 == 0);
            z = z.scale(&BigInt::from(p.pow(e / 2)));
        }
    }
    let x = z.0.magnitude().clone();
    let y = z.1.magnitude().clone();
    TwoSquaresOutcome::Representable(TwoSquares::new(x, y, n.clone()))
}

/// Deterministic prime with exactly `digits` decimal digits, drawn from the
/// supplied RNG by rejection sampling.
pub fn random_prime_with_digits<R: rand::Rng>(digits: u32, rng: &mut R) -> BigUint {
    assert!(digits >= 1);
    let low = if digits == 1 {
        BigUint::from(2u32)
    } else {
        BigUint::from(10u32).pow(digits - 1)
    };
    let high = BigUint::from(10u32).pow(digits);
    let span = &high - &low;
    loop {
        let mut cand = rng.gen_biguint_below(&span) + &low;
        if (&cand % 2u32).is_zero() {
            cand += 1u32;
            if cand >= high {
                continue;
            }
        }
        if is_probable_prime(&cand) {
            return cand;
        }
    }
}
