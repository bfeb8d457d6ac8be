//! Exact computations around the image of Galois representations attached to
//! elliptic curves over the rationals.
//!
//! The library has four mathematical layers and a command-line front end:
//!
//! - [`matgroup`]: 2x2 matrix arithmetic over Z/l^n (l an odd prime), subgroup
//!   closure with packed element encodings, Cartan subgroups and their
//!   normalizers, congruence filtrations, and the Cartan-or-ball dichotomy
//!   decision procedure.
//! - [`curve`]: short Weierstrass curves y^2 = x^3 + ax + b over Q, the
//!   j-invariant and its logarithmic height, a conservative bad-reduction
//!   radical, and traces of Frobenius a_p by naive counting or
//!   baby-step/giant-step order resolution.
//! - [`characters`]: quadratic Dirichlet characters modulo the bad-reduction
//!   product, witness-prime searches with the Kraus-style bound, the greedy
//!   exceptional-modulus algorithm, index bounds, and a witness-based mod-l
//!   surjectivity test.
//! - [`langtrotter`]: exact Euler factors and truncated products for the
//!   Lang-Trotter constant, finite-level trace censuses, and the averaged
//!   counting experiment over boxes of curves.
//! - [`cli`]: the `oit` binary, JSON/CSV report emission, and the on-disk
//!   a_p cache.

pub mod arith;
pub mod characters;
pub mod cli;
pub mod curve;
pub mod langtrotter;
pub mod matgroup;
