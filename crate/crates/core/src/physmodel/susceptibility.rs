//! Doppler-averaged susceptibilities, wave numbers, and phase matching.
//!
//! Everything is expressed in terms of the probe detuning δ from its center
//! frequency; energy conservation pins the conjugate at −δ. The effective
//! excited-state detunings are
//!
//!   Δ_pr(δ,v) = (Δ − ω₃₂) + δ − k_pr v
//!   Δ_c(δ,v)  = (Δ + ω₃₂) − δ − k_c v
//!   Δ₃₂(δ,v)  = Δ₃₂ + 2δ − (k_pr − k_c) v
//!
//! with k the vacuum wave numbers at the actual field frequencies. All three
//! resonant denominators of the third-order response live here, including the
//! narrow two-photon feature of width γ₃₂.

use num_complex::Complex64;

use crate::constants::{C_LIGHT, EPS0, HBAR};
use super::medium::{AtomicMedium, FieldGeometry, ParasiticChannel};
use super::quadrature::VelocityQuadrature;
use super::ModelError;

/// Convergence requirement for a checked susceptibility evaluation: the
/// relative change between the rule and its refinement must stay below
/// `rel_tol`.
#[derive(Debug, Clone, Copy)]
pub struct Convergence {
    pub rel_tol: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Convergence { rel_tol: 1e-6 }
    }
}

/// The medium + geometry bundle all susceptibility operations act on.
#[derive(Debug, Clone)]
pub struct SusceptibilityModel {
    pub medium: AtomicMedium,
    pub geometry: FieldGeometry,
}

impl SusceptibilityModel {
    pub fn new(medium: AtomicMedium, geometry: FieldGeometry) -> Result<Self, ModelError> {
        medium.validate()?;
        geometry.validate()?;
        Ok(SusceptibilityModel { medium, geometry })
    }

    pub fn with_defaults() -> Self {
        let medium = AtomicMedium::warm_rb85_defaults();
        let geometry = FieldGeometry::for_medium(&medium);
        SusceptibilityModel { medium, geometry }
    }

    fn chi_prefactor(&self) -> f64 {
        let m = &self.medium;
        m.number_density_per_m3 * m.reduced_dipole_c_m.powi(2) / (EPS0 * HBAR)
    }

    /// Ω_p²/(4Δ²) scale of the conjugate and third-order responses.
    fn rabi_scale(&self) -> f64 {
        let m = &self.medium;
        (m.pump_rabi_rad_s / (2.0 * m.pump_detuning_rad_s)).powi(2)
    }

    fn probe_wavenumber_vac(&self, delta: f64) -> f64 {
        (self.geometry.probe_center_rad_s + delta) / C_LIGHT
    }

    fn conjugate_wavenumber_vac(&self, delta: f64) -> f64 {
        (self.geometry.conjugate_center_rad_s - delta) / C_LIGHT
    }

    /// Linear probe susceptibility χ_pr(δ), velocity averaged.
    pub fn chi_probe(&self, delta: f64, quad: &VelocityQuadrature) -> Complex64 {
        let m = &self.medium;
        let det0 = m.pump_detuning_rad_s - m.ground_splitting_rad_s + delta;
        let k = self.probe_wavenumber_vac(delta);
        let gamma = m.excited_decay_rad_s;
        self.chi_prefactor()
            * quad.average(m, |v| {
                Complex64::new(1.0, 0.0) / Complex64::new(det0 - k * v, -gamma)
            })
    }

    /// Linear conjugate susceptibility χ_c(δ) with the Ω_p²/4Δ² scale.
    pub fn chi_conjugate(&self, delta: f64, quad: &VelocityQuadrature) -> Complex64 {
        let m = &self.medium;
        let det0 = m.pump_detuning_rad_s + m.ground_splitting_rad_s - delta;
        let k = self.conjugate_wavenumber_vac(delta);
        let gamma = m.excited_decay_rad_s;
        self.chi_prefactor()
            * self.rabi_scale()
            * quad.average(m, |v| {
                Complex64::new(1.0, 0.0) / Complex64::new(det0 - k * v, -gamma)
            })
    }

    /// Third-order response χ⁽³⁾(δ): conjugate, two-photon, and probe
    /// denominators under one velocity average.
    pub fn chi3(&self, delta: f64, quad: &VelocityQuadrature) -> Complex64 {
        let m = &self.medium;
        let pref = m.number_density_per_m3 * m.reduced_dipole_c_m.powi(4)
            / (EPS0 * HBAR.powi(3))
            * self.rabi_scale();
        let det_pr = m.pump_detuning_rad_s - m.ground_splitting_rad_s + delta;
        let det_c = m.pump_detuning_rad_s + m.ground_splitting_rad_s - delta;
        let det_32 = m.two_photon_detuning_rad_s + 2.0 * delta;
        let k_pr = self.probe_wavenumber_vac(delta);
        let k_c = self.conjugate_wavenumber_vac(delta);
        let dk = k_pr - k_c;
        let gamma = m.excited_decay_rad_s;
        let gamma32 = m.ground_decoherence_rad_s;
        pref * quad.average(m, |v| {
            let a = Complex64::new(det_c - k_c * v, -gamma);
            let b = Complex64::new(det_32 - dk * v, -gamma32);
            let c = Complex64::new(det_pr - k_pr * v, -gamma);
            Complex64::new(1.0, 0.0) / (a * b * c)
        })
    }

    /// Doppler-averaged parasitic kernel: a Lorentzian in the two-photon
    /// residual-Doppler variable, centered at the channel's Raman detuning.
    pub fn chi_parasitic(
        &self,
        delta: f64,
        channel: &ParasiticChannel,
        quad: &VelocityQuadrature,
    ) -> Complex64 {
        let k_pr = self.probe_wavenumber_vac(delta);
        let k_c = self.conjugate_wavenumber_vac(delta);
        let dk = k_pr - k_c;
        let det0 = delta - channel.raman_detuning_rad_s;
        let lw = channel.linewidth_rad_s;
        self.chi_prefactor()
            * quad.average(&self.medium, |v| {
                Complex64::new(1.0, 0.0) / Complex64::new(det0 - dk * v, -lw)
            })
    }

    /// Complex probe and conjugate wave numbers k = (ω/c)(1 + χ/2).
    pub fn wavenumbers(
        &self,
        delta: f64,
        quad: &VelocityQuadrature,
    ) -> (Complex64, Complex64) {
        let w_pr = self.geometry.probe_center_rad_s + delta;
        let w_c = self.geometry.conjugate_center_rad_s - delta;
        let k_pr = w_pr / C_LIGHT * (1.0 + self.chi_probe(delta, quad) / 2.0);
        let k_c = w_c / C_LIGHT * (1.0 + self.chi_conjugate(delta, quad) / 2.0);
        (k_pr, k_c)
    }

    /// Medium-induced part of k_pr + k_c. The vacuum parts of the phase
    /// mismatch cancel exactly by energy conservation, so Δk = −S.
    pub fn medium_wavenumber_sum(&self, delta: f64, quad: &VelocityQuadrature) -> Complex64 {
        let w_pr = self.geometry.probe_center_rad_s + delta;
        let w_c = self.geometry.conjugate_center_rad_s - delta;
        (w_pr * self.chi_probe(delta, quad) + w_c * self.chi_conjugate(delta, quad))
            / (2.0 * C_LIGHT)
    }

    /// Phase mismatch Δk(δ) = 2k_p − k_pr − k_c with a vacuum pump wave
    /// number.
    pub fn delta_k(&self, delta: f64, quad: &VelocityQuadrature) -> Complex64 {
        -self.medium_wavenumber_sum(delta, quad)
    }

    /// Longitudinal phase-matching factor sinc(ΔkL/2)·exp(i(k_pr+k_c)L/2),
    /// with the constant vacuum phase exp(iω_pL/c) dropped (it is unimodular
    /// and common to every δ, so it never affects |ψ|²).
    pub fn phase_matching(&self, delta: f64, quad: &VelocityQuadrature) -> Complex64 {
        let s = self.medium_wavenumber_sum(delta, quad);
        phase_matching_factor(s, self.medium.interaction_length_m)
    }

    /// Nonlinear coupling κ(δ) ∝ χ⁽³⁾(δ)E_p².
    pub fn coupling(&self, delta: f64, quad: &VelocityQuadrature) -> Complex64 {
        self.chi3(delta, quad) * self.medium.pump_field_v_m.powi(2)
    }

    /// κ(δ)·Φ(δ), the spectral amplitude the biphoton wavefunction transforms.
    pub fn spectral_amplitude(&self, delta: f64, quad: &VelocityQuadrature) -> Complex64 {
        self.coupling(delta, quad) * self.phase_matching(delta, quad)
    }

    /// Checked evaluation: errors if the rule and its refinement disagree.
    pub fn chi_probe_checked(
        &self,
        delta: f64,
        quad: &VelocityQuadrature,
        conv: &Convergence,
    ) -> Result<Complex64, ModelError> {
        check_finite(delta)?;
        let a = self.chi_probe(delta, quad);
        let b = self.chi_probe(delta, &quad.refined());
        converged(a, b, conv, "chi_probe", delta)?;
        Ok(a)
    }

    pub fn chi_conjugate_checked(
        &self,
        delta: f64,
        quad: &VelocityQuadrature,
        conv: &Convergence,
    ) -> Result<Complex64, ModelError> {
        check_finite(delta)?;
        let a = self.chi_conjugate(delta, quad);
        let b = self.chi_conjugate(delta, &quad.refined());
        converged(a, b, conv, "chi_conjugate", delta)?;
        Ok(a)
    }

    pub fn chi3_checked(
        &self,
        delta: f64,
        quad: &VelocityQuadrature,
        conv: &Convergence,
    ) -> Result<Complex64, ModelError> {
        check_finite(delta)?;
        let a = self.chi3(delta, quad);
        let b = self.chi3(delta, &quad.refined());
        converged(a, b, conv, "chi3", delta)?;
        Ok(a)
    }

    /// Whether Gauss-Hermite velocity averaging is trustworthy at this δ:
    /// both one-photon resonance poles must sit well outside the thermal
    /// velocity distribution (the rule cannot resolve the γ-narrow pole once
    /// it enters). Used to scope convergence guards.
    pub fn quadrature_valid_at(&self, delta: f64) -> bool {
        let m = &self.medium;
        let vbar = m.most_probable_speed();
        let v_pr = (m.pump_detuning_rad_s - m.ground_splitting_rad_s + delta)
            / self.probe_wavenumber_vac(delta);
        let v_c = (m.pump_detuning_rad_s + m.ground_splitting_rad_s - delta)
            / self.conjugate_wavenumber_vac(delta);
        v_pr.abs() > 5.0 * vbar && v_c.abs() > 5.0 * vbar
    }
}

/// sinc(SL/2)·exp(iSL/2) evaluated as expm1(iSL)/(iSL): for absorptive media
/// Im S ≥ 0, so Re(iSL) ≤ 0 and the form never overflows where the naive
/// sinc × exp product does.
pub fn phase_matching_factor(s: Complex64, length_m: f64) -> Complex64 {
    let w = Complex64::new(0.0, 1.0) * s * length_m;
    if w.norm() < 1e-8 {
        Complex64::new(1.0, 0.0) + w / 2.0 + w * w / 6.0
    } else {
        (w.exp() - 1.0) / w
    }
}

fn check_finite(delta: f64) -> Result<(), ModelError> {
    if !delta.is_finite() {
        return Err(ModelError::InvalidInput(format!(
            "detuning must be finite, got {delta}"
        )));
    }
    Ok(())
}

fn converged(
    a: Complex64,
    b: Complex64,
    conv: &Convergence,
    what: &str,
    delta: f64,
) -> Result<(), ModelError> {
    let scale = a.norm().max(b.norm());
    if scale > 0.0 && (a - b).norm() / scale > conv.rel_tol {
        return Err(ModelError::QuadratureNotConverged {
            what: what.to_string(),
            delta_rad_s: delta,
            rel_change: (a - b).norm() / scale,
            rel_tol: conv.rel_tol,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn model() -> SusceptibilityModel {
        SusceptibilityModel::with_defaults()
    }

    #[test]
    fn chi_regression_values() {
        // Frozen from the independent dense-quadrature run at delta = 0.
        let m = model();
        let q = VelocityQuadrature::default();
        let cp = m.chi_probe(0.0, &q);
        assert!((cp.re - -0.0002979943560200422).abs() / 0.0002979943560200422 < 1e-9);
        assert!((cp.im - 3.916266225544154e-07).abs() / 3.916266225544154e-07 < 1e-9);
        let cc = m.chi_conjugate(0.0, &q);
        assert!((cc.re - 6.737906892573964e-07).abs() / 6.737906892573964e-07 < 1e-9);
        assert!((cc.im - 5.084130212010051e-10).abs() / 5.084130212010051e-10 < 1e-9);
        let c3 = m.chi3(0.0, &q);
        assert!((c3.re - -1.1098176077746066e-13).abs() / 1.1098176077746066e-13 < 1e-9);
        assert!((c3.im - -2.7129350000251355e-15).abs() / 2.7129350000251355e-15 < 1e-9);
    }

    #[test]
    fn delta_k_regression_and_phi() {
        let m = model();
        let q = VelocityQuadrature::default();
        let dk = m.delta_k(0.0, &q);
        assert!((dk.re - 1174.9113474918797).abs() / 1174.9113474918797 < 1e-9);
        assert!((dk.im - -1.549586484203155).abs() / 1.549586484203155 < 1e-9);
        let phi = m.phase_matching(0.0, &q);
        assert!((phi.norm() - 0.11766064985605906).abs() < 1e-9);
    }

    #[test]
    fn chi_tails_vanish_off_resonance() {
        let m = model();
        let q = VelocityQuadrature::default();
        let far = 2.0 * PI * 1000e9;
        let c1 = m.chi_probe(-far, &q).norm();
        let c2 = m.chi_probe(-2.0 * far, &q).norm();
        assert!(c1 < 1e-6, "chi at -1 THz: {c1:e}");
        // |chi| ~ 1/|delta| tail: doubling the detuning halves the magnitude.
        assert!((c1 / c2 - 2.0).abs() < 0.02);
    }

    #[test]
    fn absorptive_imaginary_part_nonnegative() {
        let m = model();
        let q = VelocityQuadrature::default();
        for i in 0..64 {
            let delta = (i as f64 - 32.0) * 2.0 * PI * 0.25e9;
            assert!(m.chi_probe(delta, &q).im >= 0.0, "delta {delta}");
            assert!(m.chi_conjugate(delta, &q).im >= 0.0, "delta {delta}");
        }
    }

    #[test]
    fn chi3_scaling_and_limits() {
        let mut medium = AtomicMedium::warm_rb85_defaults();
        let q = VelocityQuadrature::default();
        let base = model().chi3(1e8, &q);
        // Doubling the Rabi frequency multiplies chi3 by exactly 4.
        medium.pump_rabi_rad_s *= 2.0;
        let geometry = FieldGeometry::for_medium(&medium);
        let doubled = SusceptibilityModel::new(medium, geometry).unwrap().chi3(1e8, &q);
        assert!((doubled / base - Complex64::new(4.0, 0.0)).norm() < 1e-12);

        // Large ground decoherence kills the third-order response.
        let mut dead = AtomicMedium::warm_rb85_defaults();
        dead.ground_decoherence_rad_s = 1e18;
        let g = FieldGeometry::for_medium(&dead);
        let c = SusceptibilityModel::new(dead, g).unwrap().chi3(1e8, &q);
        assert!(c.norm() < base.norm() * 1e-9);
    }

    #[test]
    fn wavenumbers_reduce_to_vacuum_without_susceptibility() {
        let m = model();
        // chi == 0 is realized by zero atomic density.
        let mut empty = AtomicMedium::warm_rb85_defaults();
        empty.number_density_per_m3 = 1e-30; // effectively vacuum
        let g = FieldGeometry::for_medium(&empty);
        let sm = SusceptibilityModel::new(empty, g).unwrap();
        let q = VelocityQuadrature::default();
        let (kp, kc) = sm.wavenumbers(0.0, &q);
        let exp_p = sm.geometry.probe_center_rad_s / C_LIGHT;
        let exp_c = sm.geometry.conjugate_center_rad_s / C_LIGHT;
        assert!((kp.re - exp_p).abs() / exp_p < 1e-12);
        assert!((kc.re - exp_c).abs() / exp_c < 1e-12);
        // Re k monotone in omega for fixed (here vanishing) chi.
        let (kp2, _) = sm.wavenumbers(1e9, &q);
        let (kp1, _) = sm.wavenumbers(-1e9, &q);
        assert!(kp2.re > kp1.re);
        let _ = m;
    }

    #[test]
    fn phase_matching_factor_limits() {
        // sinc(0) = 1.
        let phi0 = phase_matching_factor(Complex64::new(0.0, 0.0), 0.0125);
        assert!((phi0 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        // Real S with SL/2 = pi: first sinc zero, |factor| = 0.
        let s = Complex64::new(2.0 * PI / 0.0125, 0.0);
        let phi = phase_matching_factor(s, 0.0125);
        assert!(phi.norm() < 1e-12);
        // Lossless (real) S never exceeds unit magnitude.
        for i in 1..50 {
            let s = Complex64::new(i as f64 * 37.0, 0.0);
            assert!(phase_matching_factor(s, 0.0125).norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn convergence_check_errors_inside_crossing_region() {
        let m = model();
        let q = VelocityQuadrature::GaussHermite { nodes: 64 };
        let conv = Convergence { rel_tol: 1e-6 };
        // Valid band: passes.
        assert!(m.chi_probe_checked(2.0 * PI * 0.2e9, &q, &conv).is_ok());
        // One-photon resonance crossing: GH cannot converge there.
        let bad = 2.0 * PI * 2.24e9;
        assert!(!m.quadrature_valid_at(bad));
        assert!(m.chi_probe_checked(bad, &q, &conv).is_err());
        assert!(m.chi_probe_checked(f64::NAN, &q, &conv).is_err());
    }
}
