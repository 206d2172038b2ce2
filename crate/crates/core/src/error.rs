use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Whether a failure is a violated mathematical hypothesis or a numerical
/// breakdown. The CLI maps these onto distinct exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Hypothesis,
    Numerical,
    Input,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("step {step} does not divide the delay {delay}")]
    StepAlignment { step: f64, delay: f64 },

    #[error("solution blew up (non-finite state) at t = {time}")]
    BlowUp { time: f64 },

    #[error("time {time} outside [0, {t_final}]")]
    TimeOutOfRange { time: f64, t_final: f64 },

    #[error("search contour passes through a root after {attempts} jitter attempts")]
    ContourThroughRoot { attempts: usize },

    #[error("root enumeration incomplete: winding number {expected}, found {found}")]
    IncompleteEnumeration { expected: i64, found: i64 },

    #[error(
        "search window too small: roots reach the boundary; try re_min <= {suggested_re_min}, im_max >= {suggested_im_max}"
    )]
    WindowTooSmall {
        suggested_re_min: f64,
        suggested_im_max: f64,
    },

    #[error("defective root at {re}+{im}i: algebraic multiplicity {algebraic}, geometric {geometric}")]
    DefectiveRoot {
        re: f64,
        im: f64,
        algebraic: usize,
        geometric: usize,
    },

    #[error("cut index {requested} exceeds the {available} distinct real parts found")]
    CutIndex { requested: usize, available: usize },

    #[error("spectrum not stable: rightmost real part {rho1} >= 0")]
    Unstable { rho1: f64 },

    #[error("b - a = {} >= 1 (a = {a}, b = {b}): rho_1 < 0 is not guaranteed", b - a)]
    BMinusA { a: f64, b: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("no absorption: K0*L_f - gamma = {margin} >= 0")]
    NoAbsorption { margin: f64 },

    #[error("resonant squeezing constants: denominator -gamma + L_f*K0 - rho_m = {denominator}")]
    Resonance { denominator: f64 },

    #[error("certificate inadmissible: zeta = {zeta} >= 1")]
    Inadmissible { zeta: f64 },

    #[error("no alpha > 0 gives zeta < 1 (infimum of zeta over alpha is {min_zeta})")]
    Infeasible { min_zeta: f64 },

    #[error("degenerate denominator: a = L_f e^(gamma r) = {value}")]
    DegenerateDenominator { value: f64 },

    #[error("covering lemma violated: {count} centers exceed the bound {bound}")]
    LemmaViolation { count: usize, bound: f64 },

    #[error("covering construction failed at level {level}: point {point} is {distance} from every center (radius {radius})")]
    CoveringFailure {
        level: usize,
        point: usize,
        distance: f64,
        radius: f64,
    },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("failed to converge: {0}")]
    NoConvergence(String),

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn kind(&self) -> FailureKind {
        use Error::*;
        match self {
            Unstable { .. }
            | Hypothesis(_)
            | BMinusA { .. }
            | NoAbsorption { .. }
            | Inadmissible { .. }
            | Infeasible { .. }
            | DegenerateDenominator { .. }
            | Resonance { .. } => FailureKind::Hypothesis,
            InvalidInput(_) | Config { .. } | Io(_) | StepAlignment { .. } | TimeOutOfRange { .. } => {
                FailureKind::Input
            }
            _ => FailureKind::Numerical,
        }
    }

    /// Stable machine-readable code, printed by the CLI on failure.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            InvalidInput(_) => "INVALID_INPUT",
            StepAlignment { .. } => "STEP_ALIGNMENT",
            BlowUp { .. } => "BLOW_UP",
            TimeOutOfRange { .. } => "TIME_OUT_OF_RANGE",
            ContourThroughRoot { .. } => "CONTOUR_THROUGH_ROOT",
            IncompleteEnumeration { .. } => "INCOMPLETE_ENUMERATION",
            WindowTooSmall { .. } => "WINDOW_TOO_SMALL",
            DefectiveRoot { .. } => "DEFECTIVE_ROOT",
            CutIndex { .. } => "CUT_INDEX",
            Unstable { .. } => "UNSTABLE_SPECTRUM",
            Hypothesis(_) => "HYPOTHESIS",
            BMinusA { .. } => "HYPOTHESIS_B_MINUS_A",
            NoAbsorption { .. } => "NO_ABSORPTION",
            Resonance { .. } => "RESONANCE",
            Inadmissible { .. } => "INADMISSIBLE_ZETA",
            Infeasible { .. } => "INFEASIBLE_ALPHA",
            DegenerateDenominator { .. } => "DEGENERATE_DENOMINATOR",
            LemmaViolation { .. } => "LEMMA_VIOLATION",
            CoveringFailure { .. } => "COVERING_FAILURE",
            Sampling(_) => "SAMPLING",
            NoConvergence(_) => "NO_CONVERGENCE",
            EmptyCloud => "EMPTY_CLOUD",
            Config { .. } => "CONFIG",
            Io(_) => "IO",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
