use thiserror::Error;

/// Crate-wide error type. Variants are grouped by the stage that raises them:
/// space construction, generation, operator algebra, spectral work, and the
/// certification/pipeline layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distance table is not symmetric at ({x},{y}): {dxy} vs {dyx}")]
    AsymmetricDistance { x: usize, y: usize, dxy: f64, dyx: f64 },

    #[error("negative distance d({x},{y}) = {d}")]
    NegativeDistance { x: usize, y: usize, d: f64 },

    #[error("diagonal distance d({x},{x}) = {d} must be zero")]
    NonzeroDiagonal { x: usize, d: f64 },

    #[error("zero distance between distinct points {x} and {y}")]
    ZeroDistance { x: usize, y: usize },

    #[error(
        "triangle inequality violated: d({x},{y}) = {dxy} > d({x},{z}) + d({z},{y}) = {sum}"
    )]
    TriangleViolation { x: usize, y: usize, z: usize, dxy: f64, sum: f64 },

    #[error("point {point} out of range for a space with {n} points")]
    PointOutOfRange { point: usize, n: usize },

    #[error("infinite distance from basepoint {from} to point {to}")]
    InfiniteDistance { from: usize, to: usize },

    #[error("empty block list")]
    EmptyBlockList,

    #[error("block {block} has an infinite internal distance; box blocks must be connected")]
    DisconnectedBlock { block: usize },

    #[error("empty point selection")]
    EmptySelection,

    #[error("generator retry cap of {cap} exceeded for random regular graph (n={n}, d={d})")]
    GeneratorRetriesExceeded { n: usize, d: usize, cap: usize },

    #[error("operator entries conflict at ({x},{y}): {a} vs {b}")]
    ConflictingEntries { x: usize, y: usize, a: f64, b: f64 },

    #[error("vector length {got} does not match space size {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operators live on spaces of different sizes: {a} vs {b}")]
    SpaceMismatch { a: usize, b: usize },

    #[error("entry ({x},{y}) = {value} crosses decomposition groups")]
    CrossGroupEntry { x: usize, y: usize, value: f64 },

    #[error("groups do not cover the support of the operator (point {point} unassigned)")]
    UncoveredSupport { point: usize },

    #[error("dense eigensolve size cap exceeded: {size} > {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error(
        "operator norm iteration did not converge after {iterations} steps; bracket [{lower}, {upper}]"
    )]
    NormNonConvergence { lower: f64, upper: f64, iterations: usize },

    #[error("polynomial degree cap {cap} reached before sup error {target} was met (best {best})")]
    DegreeCapExceeded { cap: usize, target: f64, best: f64 },

    #[error("operator spectrum [{lo}, {hi}] is not contained in the filter domain [{dlo}, {dhi}]")]
    SpectrumOutsideDomain { lo: f64, hi: f64, dlo: f64, dhi: f64 },

    #[error(
        "no localized witness at scale S = {s}: minimal ball gap {kappa_ball} is not positive"
    )]
    NoLocalizedWitness { s: f64, kappa_ball: f64 },

    #[error("witness at S = {s} certifies c = {certified} > requested c = {requested}")]
    WitnessTooWeak { s: f64, certified: f64, requested: f64 },

    #[error(
        "localized witness provider exhausted at construction step {step} (requested S = {s}): {source}"
    )]
    ProviderExhausted { step: usize, s: f64, #[source] source: Box<Error> },

    #[error(
        "no block of the decomposed witness exceeds the selection threshold {threshold} (best norm {best}); witness failure"
    )]
    NoBlockAboveThreshold { threshold: f64, best: f64 },

    #[error("certificate contains heuristic entries; an exact certificate is required")]
    CertificateNotExact,

    #[error("report schemas do not match: {0}")]
    SchemaMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
