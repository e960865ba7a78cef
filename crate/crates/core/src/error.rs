use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {position}: expected {}", expected.join(" or "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
    },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("domain error: {func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },

    #[error("no value for variable `{0}`")]
    MissingVariable(String),

    #[error("non-finite constant {0}")]
    NonFinite(f64),

    #[error("λ-degree {degree} exceeds the cap of {cap}")]
    DegreeOverflow { degree: usize, cap: usize },

    #[error("`{0}` is not a polynomial in λ")]
    NotPolynomial(String),

    #[error("singular coframe: |det| = {det:e}, condition number {cond:e}")]
    SingularCoframe { det: f64, cond: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("symbol rank {rank} < 4: structure outside the supported class")]
    RankDeficient { rank: usize },

    #[error("symbol has full rank 5: the equation does not have a degenerate symbol")]
    RankFull,

    #[error("{0} needs one more jet order than the point provides")]
    ConstrainedJetMode(&'static str),

    #[error("conformal symplectic form is degenerate (δ = {delta:e})")]
    DegenerateOmega { delta: f64 },

    #[error("metric signature is ({positive},{negative}), expected (2,2)")]
    SignatureMismatch { positive: usize, negative: usize },

    #[error("degenerate congruence: a_λ c_λ - b_λ² = {det:e}")]
    DegenerateCongruence { det: f64 },

    #[error("Lax generators are linearly dependent (relative σ₂ = {ratio:e})")]
    DependentGenerators { ratio: f64 },

    #[error("structure function v vanishes ({value:e})")]
    VanishingV { value: f64 },

    #[error("covector lies too close to the characteristic quadric (Q = {value:e})")]
    QNearZero { value: f64 },

    #[error("dω̃⁰ differs from Ω̃ by {residual:e}")]
    PrimitiveMismatch { residual: f64 },

    #[error("cannot solve for `{var}`: derivative {derivative:e} below tolerance")]
    NotSolvable { var: String, derivative: f64 },

    #[error("Newton iteration diverged after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("internal check failed: {0}")]
    Check(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Config errors abort a run; everything else is recorded per point.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Syntax { .. }
                | Error::UnknownIdentifier(_)
                | Error::DuplicateVariable(_)
                | Error::NotPolynomial(_)
                | Error::DegreeOverflow { .. }
        )
    }
}
