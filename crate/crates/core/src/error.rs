use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NonHermitianInput { defect: f64 },
    #[error("spectrum is degenerate (gap {gap:.3e})")]
    DegenerateSpectrum { gap: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("step size underflow at t = {t} (step {step:.3e}); epsilon too small for the accuracy budget")]
    StepUnderflow { t: f64, step: f64 },
    #[error("superadiabatic level {q} lost its spectral gap at t = {t}")]
    GapClosure { q: usize, t: f64 },
    #[error("least-squares fit diverged (normalized residual {residual:.3e})")]
    FitDiverged { residual: f64 },
    #[error("iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("complex zero lies on the real axis (Im z0 = {imag:.3e}); gap hypothesis violated")]
    ZeroOnRealAxis { imag: f64 },
    #[error("square-root branch could not be tracked continuously near z = {at}")]
    BranchDiscontinuity { at: num_complex::Complex64 },
    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("amplitude {value:.3e} at epsilon = {epsilon} is not positive")]
    NonPositiveAmplitude { epsilon: f64, value: f64 },
    #[error("coefficients still drift by {drift:.3e} between x_max and 1.25 x_max")]
    WindowTooSmall { drift: f64 },
    #[error("energy {energy} is outside the scattering window (needs E > {threshold})")]
    EnergyOutsideWindow { energy: f64, threshold: f64 },
    #[error("minimum of alpha at E = {e_star} is on the boundary of [{lo}, {hi}]")]
    MinimumOnBoundary { e_star: f64, lo: f64, hi: f64 },
    #[error("energy quadrature under-resolved: L2 norm changed by {change:.3e} on refinement")]
    QuadratureUnderResolved { change: f64 },
    #[error("Gaussian normalization Re(conj(B) A) - 1 = {defect:.3e}")]
    NormalizationViolation { defect: f64 },
}
