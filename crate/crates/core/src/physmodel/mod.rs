//! Doppler-broadened SFWM biphoton model.
//!
//! Computes velocity-averaged susceptibilities in the effective-excited-state
//! limit, the longitudinal phase-matching factor, the biphoton temporal
//! wavefunction ψ(τ), the two parasitic Raman-channel densities, and the
//! composite coincidence prediction C(τ) on TCSPC-style delay bins.

pub mod medium;
pub mod profile;
pub mod quadrature;
pub mod spectral;
pub mod susceptibility;

pub use medium::{derive_dipole, AtomicMedium, FieldGeometry, ModelConfig, ParasiticChannel};
pub use profile::{
    biphoton_psi, coincidence_profile, fit_amplitude, parasitic_density, relative_rms,
    ModelHistogram, ProfileSummary,
};
pub use quadrature::{gauss_hermite, maxwell_boltzmann_pdf, GaussHermiteRule, VelocityQuadrature};
pub use spectral::{direct_dft, SpectralGrid, TemporalAmplitude, TemporalDensity};
pub use susceptibility::{phase_matching_factor, Convergence, SusceptibilityModel};

/// Errors from model construction and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// A parameter or argument is out of its domain.
    InvalidInput(String),
    /// A profile amplitude was negative.
    NegativeWeight,
    /// Velocity quadrature failed its refinement check.
    QuadratureNotConverged {
        what: String,
        delta_rad_s: f64,
        rel_change: f64,
        rel_tol: f64,
    },
    /// Spectrum does not decay at the grid edges; widen the span.
    EdgeLeakage { what: String, ratio: f64, limit: f64 },
}

impl std::fmt::Display for ModelError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            ModelError::NegativeWeight => write!(f, "profile weights must be nonnegative"),
            ModelError::QuadratureNotConverged {
                what,
                delta_rad_s,
                rel_change,
                rel_tol,
            } => {
                write!(f, "velocity quadrature did not converge for {what}")?;
                if delta_rad_s.is_finite() {
                    write!(f, " at delta = {delta_rad_s} rad/s")?;
                }
                write!(
                    f,
                    ": relative change {rel_change:.3e} exceeds {rel_tol:.1e}; increase the \
                     node count or avoid the one-photon resonance crossing"
                )
            }
            ModelError::EdgeLeakage { what, ratio, limit } => write!(
                f,
                "{what} leaks at the grid edges (edge/peak {ratio:.3e} >= {limit:.1e}); \
                 widen the spectral span"
            ),
        }
    }
}

impl std::error::Error for ModelError {}
