//! Exact arithmetic for 2x2 matrices over Z/l^n (l an odd prime), finitely
//! generated subgroups of GL_2, Cartan subgroups and their normalizers,
//! congruence filtrations, and the Cartan-or-ball dichotomy decision
//! procedure.

mod cartan;
mod dichotomy;
mod group;
mod level;
mod lie;
mod matrix;

pub use cartan::{
    cartan_centralizer, cartan_param_closure, cartan_position, cartan_standard,
    find_cartan_normalizer, param_det, param_identity, param_mul, param_pow, param_scalar,
    CartanKind, CartanPosition, CartanSet, CartanSubgroup, CartanWitness,
};
pub use dichotomy::{
    check_dichotomy, verify_filtration_lemma, BallEvidence, DichotomyOutcome, FiltrationCheck,
    FiltrationLemmaReport,
};
pub use group::{
    ball_preimage, commutator_subgroup, contains_ball, group_closure, MatGroup, DEFAULT_CLOSURE_CAP,
};
pub use level::Level;
pub use lie::{
    filtration, rep_decomposition, twisted_commutator_span, FiltrationTable, LieSubspace,
    RepDecomposition,
};
pub use matrix::ModMatrix;

/// Errors for matrix-group operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatGroupError {
    #[error("level requires an odd prime, got {0}")]
    NotOddPrime(u64),
    #[error("level exponent must be >= 1")]
    ZeroExponent,
    #[error("modulus {0} overflows 64 bits")]
    ModulusOverflow(u64),
    #[error("modulus {0} exceeds the packed element encoding limit {1}")]
    ModulusTooLarge(u64, u64),
    #[error("operands live at different levels")]
    LevelMismatch,
    #[error("group closure exceeded the cap of {0} elements")]
    CapExceeded(usize),
    #[error("generator has non-unit determinant")]
    NonUnitDet,
    #[error("epsilon is a square modulo l, so it does not define a non-split Cartan")]
    BadEpsilon,
    #[error("matrix is not regular semisimple: tr^2 - 4 det is divisible by l")]
    NotRegularSemisimple,
    #[error("congruence filtration needs level exponent >= 2")]
    LevelTooLow,
    #[error("Cartan-normalizer search was inconclusive: {0}")]
    Inconclusive(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("dichotomy violated: neither branch verified ({0})")]
    TheoremViolation(String),
}
