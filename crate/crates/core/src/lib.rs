//! Minimal-height integral lifts of points on spheres over `Z/q`.
//!
//! A point `a` on the unit sphere `S^d(Z/q)` (that is, `|a|^2 = 1 (mod q)`)
//! can be lifted to a genuine rational point `s = n / p^h` on the real unit
//! sphere whose coordinates are integers divided by a power of a fixed
//! prime `p`, with `s = a (mod q)` after clearing denominators.  The
//! smallest exponent `h` that admits such a lift measures an arithmetic
//! complexity of `a`; for points whose last two coordinates are zero, that
//! complexity is governed by a lattice invariant `eta(a)` of the
//! orthogonality lattice of the nonzero coordinates, computable through
//! exact LLL reduction.
//!
//! The crate provides the three layers of that story:
//!
//! * [`numtheory`] — modular inverses, primality, budgeted factoring,
//!   square roots mod `p`, sums of two squares;
//! * [`lattice`] — the orthogonality lattice of a point, exact-arithmetic
//!   LLL, the height invariant `eta`, and basis quality diagnostics;
//! * [`lifting`] — the recursive search for minimal-denominator lifts;
//! * [`harness`] — samplers, experiment drivers, and CSV/SVG reporting for
//!   reproducing the empirical law `w_p(a) = (1 - 1/d)(1 + eta(a))`.

pub mod harness;
pub mod lattice;
pub mod lifting;
pub mod numeric;
pub mod numtheory;

pub use harness::{
    conjecture_scan, csv_string, default_p_for, default_r_range, read_prime_file, run_experiment,
    sample_point, scan_window, write_csv, write_svg_scatter, ConjectureReport, ConjectureTrial,
    ExperimentConfig, ExperimentRecord, HarnessError, RowStatus, SampleMode, SamplerSpec,
};

pub use lifting::{
    bounded_coordinate_range, build_form, compute_box, int_lift, make_problem, minimal_lift,
    solve_condition2, solve_lift_problem, wp_exponent, Budgets, LiftError, LiftForm, LiftProblem,
    MinimalLift, PadicLift, SearchBox, SearchMode, SearchOutcome, SearchStatus,
};

pub use lattice::{
    babai_angles, babai_sin_sq, default_delta, eta, gram_schmidt, lattice_basis_of, lll_reduce,
    verify_lll, EtaResult, GramSchmidtData, IntegerBasis, LatticeError, ModPoint,
};

pub use numtheory::{
    factorize, is_probable_prime, mod_inverse, sqrt_mod_p, two_squares, two_squares_prime,
    Factorization, TwoSquares, TwoSquaresOutcome,
};
