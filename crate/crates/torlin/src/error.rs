use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are split informally into precondition violations (bad inputs,
/// rejected before any work happens) and verification failures (an internal
/// re-check of a computed witness or identity did not pass). The CLI maps
/// the two classes onto different exit codes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not unimodular: det = {0}")]
    NotUnimodular(String),
    #[error("representation dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("element is not hyperbolic: {0}")]
    NotHyperbolic(String),
    #[error("orbit cap must be positive")]
    ZeroCap,
    #[error("orbit of the zero vector is trivial; supply a nonzero vector")]
    ZeroVector,
    #[error("matrix has no exact inverse over the integers")]
    NotInvertible,
    #[error("no fixed integer vector: ker(M - I) = 0")]
    NoFixedVector,
    #[error("witness verification failed: {0}")]
    WitnessVerification(String),
    #[error("inconsistent input: {0}")]
    InconsistentInput(String),
    #[error("order must be odd and at least 3, got {0}")]
    BadOddOrder(usize),

    #[error("polynomial has no nonzero coefficient")]
    ZeroPolynomial,
    #[error("projective point (0, 0) is not allowed")]
    ZeroProjPoint,
    #[error("matrix determinant {0} is not 1 within tolerance")]
    NotSpecialLinear(String),
    #[error("root finding did not converge")]
    RootFinding,

    #[error("word is not reduced: {0}")]
    UnreducedWord(String),
    #[error("cannot parse group word {0:?}")]
    BadWord(String),
    #[error("measure weights must be nonnegative and sum to 1, got sum {0}")]
    BadMeasure(String),
    #[error("action entry missing for element {element} at point {point}")]
    MissingAction { element: String, point: String },
    #[error("subset is not invariant under the tested elements")]
    NonInvariantSubset,
    #[error("supplied permutations do not commute with the group action")]
    NonCommutingActions,
    #[error("supplied permutations are not closed under composition")]
    NotAGroup,
    #[error("symmetric power degree {0} out of supported range 2..=4")]
    BadSymDegree(usize),
    #[error("ray depth {depth} too small for window {window} and element length {elem_len}")]
    RayDepthTooSmall { depth: usize, window: usize, elem_len: usize },
    #[error("boundary rays must all have the same positive length")]
    BadRaySample,

    #[error("classes do not partition the point set")]
    BadPartition,
    #[error("cocycle value at {0:?} is not unimodular")]
    NonUnimodularCocycle(String),
    #[error("cocycle axiom violated at {0}")]
    CocycleAxiom(String),
    #[error("permutation does not preserve the relation classes")]
    NotClassPreserving,
    #[error("not a permutation of the point set")]
    NotAPermutation,
    #[error("function must be defined on every point")]
    BadPointFunction,

    #[error("group order must be finite here")]
    InfiniteOrder,
    #[error("edge order must divide both vertex orders")]
    BadAmalgam,
    #[error("Euler characteristic must be nonpositive, got {0}")]
    PositiveChi(String),
    #[error("amalgam is a finite group (both edge indices are 1)")]
    FiniteAmalgam,
    #[error("amplification parameter must be positive, got {0}")]
    BadAmplification(String),

    #[error("torus point coordinates and matrix dimension disagree")]
    PointDimension,
    #[error("rational start denominator {0} exceeds the exact-mode cap")]
    DenominatorTooLarge(String),
    #[error("matrix entry too large for the floating-point orbit path")]
    EntryTooLarge,
    #[error("empirical measure is malformed: {0}")]
    BadEmpiricalMeasure(String),
    #[error("box bounds must satisfy 0 <= lo <= hi <= 1 coordinatewise")]
    BadBox,
    #[error("trace is empty")]
    EmptyTrace,
}

impl Error {
    /// True for errors that mean a computed certificate or identity failed
    /// its re-check, as opposed to a rejected input.
    pub fn is_verification_failure(&self) -> bool {
        matches!(self, Error::WitnessVerification(_) | Error::CocycleAxiom(_) | Error::RootFinding)
    }
}
