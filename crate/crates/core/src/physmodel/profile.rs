//! Biphoton temporal wavefunction, parasitic densities, and the composite
//! coincidence prediction.
//!
//! The predicted histogram is
//!
//!   C(bin) = T · [ β ∫_bin p̂_ψ + Σ_j β_j ∫_bin p̂_j ]
//!
//! where each density is unit-normalized over the τ grid (the amplitudes
//! carry all units) and bin integrals are trapezoid integrals of the fine
//! grid, not point samples. Densities are trigger-symmetrized: either
//! detector can act as start, so each contribution enters evenly about its
//! offset and any asymmetry of the composite comes from the channel-weight
//! ratio alone.

use num_complex::Complex64;
use rayon::prelude::*;

use super::medium::ParasiticChannel;
use super::spectral::{SpectralGrid, TemporalAmplitude, TemporalDensity};
use super::susceptibility::{Convergence, SusceptibilityModel};
use super::quadrature::VelocityQuadrature;
use super::ModelError;

/// Edge-leakage bound for the biphoton spectrum κΦ.
const SFWM_LEAKAGE_LIMIT: f64 = 1e-4;
/// The parasitic kernel's dispersive 1/δ tail cannot meet 1e-4 on realistic
/// spans (the ratio is linewidth/half-span by construction); 1e-3 still
/// rejects grossly undersized grids.
const PARASITIC_LEAKAGE_LIMIT: f64 = 1e-3;
/// δ-subsample size for the quadrature convergence guard.
const GUARD_POINTS: usize = 32;

/// Biphoton temporal wavefunction ψ(τ): Fourier synthesis of κ(δ)Φ(δ).
///
/// Errors if the spectrum leaks at the grid edges (span too narrow) or the
/// velocity quadrature fails its refinement check on the guard subsample
/// (restricted to detunings where the rule is applicable; elsewhere the
/// spectrum is phase-mismatch suppressed).
pub fn biphoton_psi(
    model: &SusceptibilityModel,
    grid: &SpectralGrid,
    quad: &VelocityQuadrature,
) -> Result<TemporalAmplitude, ModelError> {
    let deltas = grid.deltas();
    let spectrum: Vec<Complex64> = deltas
        .par_iter()
        .map(|&d| model.spectral_amplitude(d, quad))
        .collect();

    check_leakage(&spectrum, SFWM_LEAKAGE_LIMIT, "biphoton spectrum")?;
    convergence_guard(model, grid, quad, |m, d, q| m.spectral_amplitude(d, q))?;
    grid.synthesize(&spectrum)
}

/// Parasitic channel density p_j(τ): the Doppler-averaged kernel with the
/// spectral phase shift e^{iδτ_j}, transformed, squared, and symmetrized
/// about the offset.
pub fn parasitic_density(
    model: &SusceptibilityModel,
    channel: &ParasiticChannel,
    grid: &SpectralGrid,
    quad: &VelocityQuadrature,
) -> Result<TemporalDensity, ModelError> {
    channel.validate()?;
    let ep = model.medium.pump_field_v_m;
    let tau_j = channel.time_offset_s;
    let deltas = grid.deltas();
    let spectrum: Vec<Complex64> = deltas
        .par_iter()
        .map(|&d| {
            let kernel = model.chi_parasitic(d, channel, quad) * ep;
            kernel * Complex64::new(0.0, d * tau_j).exp()
        })
        .collect();

    check_leakage(&spectrum, PARASITIC_LEAKAGE_LIMIT, "parasitic spectrum")?;
    let mut density = grid.synthesize(&spectrum)?.density();
    density.symmetrize_about(tau_j);
    Ok(density)
}

fn check_leakage(spectrum: &[Complex64], limit: f64, what: &str) -> Result<(), ModelError> {
    let peak = spectrum.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let edge = spectrum[0].norm().max(spectrum[spectrum.len() - 1].norm());
    if peak > 0.0 && edge / peak >= limit {
        return Err(ModelError::EdgeLeakage {
            what: what.to_string(),
            ratio: edge / peak,
            limit,
        });
    }
    Ok(())
}

fn convergence_guard<F>(
    model: &SusceptibilityModel,
    grid: &SpectralGrid,
    quad: &VelocityQuadrature,
    eval: F,
) -> Result<(), ModelError>
where
    F: Fn(&SusceptibilityModel, f64, &VelocityQuadrature) -> Complex64,
{
    let conv = Convergence::default();
    let refined = quad.refined();
    let step = (grid.n_points() / GUARD_POINTS).max(1);
    let mut num = 0.0;
    let mut den = 0.0;
    for k in (0..grid.n_points()).step_by(step) {
        let d = grid.delta_at(k);
        if !model.quadrature_valid_at(d) {
            continue;
        }
        let a = eval(model, d, quad);
        let b = eval(model, d, &refined);
        num += (a - b).norm();
        den += a.norm();
    }
    if den > 0.0 && num / den > conv.rel_tol {
        return Err(ModelError::QuadratureNotConverged {
            what: "grid spectrum".to_string(),
            delta_rad_s: f64::NAN,
            rel_change: num / den,
            rel_tol: conv.rel_tol,
        });
    }
    Ok(())
}

/// Model coincidence histogram: float counts per delay bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelHistogram {
    pub window_lo_s: f64,
    pub window_hi_s: f64,
    pub bin_width_s: f64,
    pub counts: Vec<f64>,
}

impl ModelHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.window_lo_s + (i as f64 + 0.5) * self.bin_width_s
    }
}

/// Composite coincidence prediction C(τ) on the requested delay bins.
///
/// β weights the SFWM density; each channel carries its own weight. All
/// weights must be nonnegative. The window must divide evenly into bins and
/// fit inside the τ grid.
#[allow(clippy::too_many_arguments)]
pub fn coincidence_profile(
    model: &SusceptibilityModel,
    channels: &[ParasiticChannel],
    beta: f64,
    dt_bin_s: f64,
    acq_time_s: f64,
    window_halfwidth_s: f64,
    grid: &SpectralGrid,
    quad: &VelocityQuadrature,
) -> Result<ModelHistogram, ModelError> {
    if !(beta >= 0.0) {
        return Err(ModelError::NegativeWeight);
    }
    for ch in channels {
        ch.validate()?;
    }
    if !(dt_bin_s > 0.0) || !(acq_time_s > 0.0) || !(window_halfwidth_s > 0.0) {
        return Err(ModelError::InvalidInput(
            "bin width, acquisition time and window must be positive".into(),
        ));
    }
    let n_bins_f = 2.0 * window_halfwidth_s / dt_bin_s;
    let n_bins = n_bins_f.round() as usize;
    if n_bins == 0 || (n_bins_f - n_bins as f64).abs() > 1e-9 * n_bins_f {
        return Err(ModelError::InvalidInput(format!(
            "window ±{window_halfwidth_s} s is not divisible by bin width {dt_bin_s} s"
        )));
    }
    let grid_half = grid.tau_at(grid.n_points() - 1);
    if window_halfwidth_s > grid_half {
        return Err(ModelError::InvalidInput(format!(
            "window ±{window_halfwidth_s} s exceeds the τ grid range ±{grid_half} s"
        )));
    }

    let mut sfwm = biphoton_psi(model, grid, quad)?.density();
    sfwm.symmetrize_about(0.0);
    let mut acc = vec![0.0f64; n_bins];
    accumulate(&mut acc, &sfwm, beta, -window_halfwidth_s, dt_bin_s);
    for ch in channels {
        let dens = parasitic_density(model, ch, grid, quad)?;
        accumulate(&mut acc, &dens, ch.weight, -window_halfwidth_s, dt_bin_s);
    }
    let counts: Vec<f64> = acc.into_iter().map(|v| acq_time_s * v).collect();
    Ok(ModelHistogram {
        window_lo_s: -window_halfwidth_s,
        window_hi_s: window_halfwidth_s,
        bin_width_s: dt_bin_s,
        counts,
    })
}

/// Add weight·∫_bin p̂ dτ for every bin, p̂ being the unit-normalized density
/// (normalization by the plain Riemann sum over the grid).
fn accumulate(acc: &mut [f64], density: &TemporalDensity, weight: f64, lo_s: f64, bin_s: f64) {
    if weight == 0.0 {
        return;
    }
    let prim = TrapezoidPrimitive::new(density);
    let scale = weight / density.integral();
    for (i, slot) in acc.iter_mut().enumerate() {
        let a = lo_s + i as f64 * bin_s;
        *slot += scale * (prim.eval(a + bin_s) - prim.eval(a));
    }
}

/// Running trapezoid integral of a piecewise-linear density: F(x) = ∫ from
/// the grid start to x, exact for edges on or between grid points.
struct TrapezoidPrimitive<'a> {
    density: &'a TemporalDensity,
    prefix: Vec<f64>,
}

impl<'a> TrapezoidPrimitive<'a> {
    fn new(density: &'a TemporalDensity) -> Self {
        let v = density.values();
        let dt = density.tau_step_s();
        let mut prefix = vec![0.0; v.len()];
        for j in 1..v.len() {
            prefix[j] = prefix[j - 1] + 0.5 * (v[j - 1] + v[j]) * dt;
        }
        TrapezoidPrimitive { density, prefix }
    }

    fn eval(&self, x: f64) -> f64 {
        let v = self.density.values();
        let n = v.len();
        let dt = self.density.tau_step_s();
        let t0 = self.density.tau_at(0);
        let pos = ((x - t0) / dt).clamp(0.0, (n - 1) as f64);
        let c = (pos.floor() as usize).min(n - 2);
        let t = pos - c as f64;
        self.prefix[c] + dt * (v[c] * t + 0.5 * (v[c + 1] - v[c]) * t * t)
    }
}

/// Trapezoid integral of the density over [a, b].
#[cfg(test)]
fn segment_integral(density: &TemporalDensity, a: f64, b: f64) -> f64 {
    let prim = TrapezoidPrimitive::new(density);
    prim.eval(b) - prim.eval(a)
}

/// Least-squares single amplitude: argmin_a ‖a·model − reference‖².
pub fn fit_amplitude(model: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = model.iter().zip(reference).map(|(m, r)| m * r).sum();
    let den: f64 = model.iter().map(|m| m * m).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// ‖a·model − reference‖ / ‖reference‖.
pub fn relative_rms(amplitude: f64, model: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = model
        .iter()
        .zip(reference)
        .map(|(m, r)| (amplitude * m - r).powi(2))
        .sum();
    let den: f64 = reference.iter().map(|r| r * r).sum();
    (num / den).sqrt()
}

/// Headline numbers for a computed profile.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ProfileSummary {
    pub peak_tau_ns: f64,
    pub peak_counts: f64,
    pub plateau_fwhm_ns: f64,
    pub side_feature_tau_ns: Vec<f64>,
}

impl ProfileSummary {
    /// Peak, half-max plateau width, and per-channel side-feature positions.
    pub fn from_histogram(hist: &ModelHistogram, channels: &[ParasiticChannel]) -> Self {
        let (pk, &pk_v) = hist
            .counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let half = pk_v / 2.0;
        let mut l = pk;
        while l > 0 && hist.counts[l] >= half {
            l -= 1;
        }
        let mut r = pk;
        while r + 1 < hist.counts.len() && hist.counts[r] >= half {
            r += 1;
        }
        ProfileSummary {
            peak_tau_ns: hist.bin_center(pk) * 1e9,
            peak_counts: pk_v,
            plateau_fwhm_ns: (r - l).saturating_sub(1) as f64 * hist.bin_width_s * 1e9,
            side_feature_tau_ns: channels.iter().map(|c| c.time_offset_s * 1e9).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physmodel::medium::AtomicMedium;

    fn model() -> SusceptibilityModel {
        SusceptibilityModel::with_defaults()
    }

    fn small_grid() -> SpectralGrid {
        // 2^12 over 16 GHz: tau step 62.5 ps over ±128 ns; fast for units.
        SpectralGrid::new(2.0 * std::f64::consts::PI * 16e9, 1 << 12).unwrap()
    }

    #[test]
    fn psi_is_finite_and_nonzero() {
        let m = model();
        let psi = biphoton_psi(&m, &small_grid(), &VelocityQuadrature::default()).unwrap();
        let total = psi.total_power();
        assert!(total.is_finite() && total > 0.0);
        for v in psi.values() {
            assert!(v.re.is_finite() && v.im.is_finite());
        }
    }

    #[test]
    fn narrow_span_triggers_leakage_error() {
        let m = model();
        // 100 MHz span: the broad kappa*Phi spectrum cannot fit.
        let grid = SpectralGrid::new(2.0 * std::f64::consts::PI * 100e6, 1 << 10).unwrap();
        let err = biphoton_psi(&m, &grid, &VelocityQuadrature::default()).unwrap_err();
        assert!(matches!(err, ModelError::EdgeLeakage { .. }), "{err}");
    }

    #[test]
    fn parasitic_density_peaks_at_offset_and_mirrors() {
        let m = model();
        let grid = small_grid();
        let q = VelocityQuadrature::default();
        let [f2, f3] = ParasiticChannel::default_pair(&m.medium, 1.0, 1.0);
        let p2 = parasitic_density(&m, &f2, &grid, &q).unwrap();
        let p3 = parasitic_density(&m, &f3, &grid, &q).unwrap();
        let pk2 = p2.peak_index();
        assert!((p2.tau_at(pk2) - 10.5e-9).abs() <= p2.tau_step_s() + 1e-15);
        for v in p2.values() {
            assert!(*v >= 0.0);
        }
        // mirrored channels: p2(tau) == p3(-tau)
        let n = p2.len();
        let pk = p2.values()[pk2];
        for mth in 0..n {
            let r = (n - mth) % n;
            let d = (p2.values()[mth] - p3.values()[r]).abs();
            assert!(d <= 1e-12 * pk, "mirror mismatch at {mth}: {d:e}");
        }
        // zero offset peaks at tau = 0 (within one step: the sampled edge of
        // the one-sided kernel puts the maximum one sample off the cusp)
        let ch0 = ParasiticChannel {
            time_offset_s: 0.0,
            ..f2.clone()
        };
        let p0 = parasitic_density(&m, &ch0, &grid, &q).unwrap();
        assert!(p0.tau_at(p0.peak_index()).abs() <= p0.tau_step_s() + 1e-15);
    }

    #[test]
    fn raman_detuning_leaves_density_unchanged() {
        let m = model();
        let grid = small_grid();
        let q = VelocityQuadrature::default();
        let [f2, _] = ParasiticChannel::default_pair(&m.medium, 1.0, 1.0);
        let shifted = ParasiticChannel {
            raman_detuning_rad_s: 2.0 * std::f64::consts::PI * 50e6,
            ..f2.clone()
        };
        let p_base = parasitic_density(&m, &f2, &grid, &q).unwrap();
        let p_shift = parasitic_density(&m, &shifted, &grid, &q).unwrap();
        let pk = p_base.values()[p_base.peak_index()];
        // A spectral center shift is a pure time-domain phase in the
        // continuum; on the grid it only re-samples the kernel's slow 1/δ
        // tail at the edges, so the density moves at the leakage scale.
        let max_d = p_base
            .values()
            .iter()
            .zip(p_shift.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_d < 5e-2 * pk, "max density change {max_d:e} vs peak {pk:e}");
    }

    #[test]
    fn composite_profile_linear_in_amplitudes_and_symmetric() {
        let m = model();
        let grid = small_grid();
        let q = VelocityQuadrature::default();
        let channels = ParasiticChannel::default_pair(&m.medium, 500.0, 500.0);
        let h1 = coincidence_profile(&m, &channels, 900.0, 250e-12, 600.0, 30e-9, &grid, &q)
            .unwrap();
        assert_eq!(h1.n_bins(), 240);
        for c in &h1.counts {
            assert!(*c >= 0.0 && c.is_finite());
        }
        // symmetry with equal channel weights
        let cmax = h1.counts.iter().cloned().fold(0.0, f64::max);
        for i in 0..h1.n_bins() {
            let j = h1.n_bins() - 1 - i;
            assert!(
                (h1.counts[i] - h1.counts[j]).abs() <= 1e-9 * cmax,
                "bin {i} vs {j}"
            );
        }
        // doubling acquisition time doubles counts exactly
        let h2 = coincidence_profile(&m, &channels, 900.0, 250e-12, 1200.0, 30e-9, &grid, &q)
            .unwrap();
        for (a, b) in h1.counts.iter().zip(&h2.counts) {
            assert!((2.0 * a - b).abs() <= 1e-12 * cmax);
        }
        // and so does doubling every amplitude
        let channels2 = ParasiticChannel::default_pair(&m.medium, 1000.0, 1000.0);
        let h4 = coincidence_profile(&m, &channels2, 1800.0, 250e-12, 600.0, 30e-9, &grid, &q)
            .unwrap();
        for (a, b) in h1.counts.iter().zip(&h4.counts) {
            assert!((2.0 * a - b).abs() <= 1e-9 * cmax);
        }
        // beta = 0 with a single channel: single side feature at +10.5 ns
        let one = [channels[0].clone()];
        let h3 =
            coincidence_profile(&m, &one, 0.0, 250e-12, 600.0, 30e-9, &grid, &q).unwrap();
        let pk = h3
            .counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!((h3.bin_center(pk) - 10.5e-9).abs() <= 2.0 * h3.bin_width_s);
        // negative weight rejected
        assert!(matches!(
            coincidence_profile(&m, &channels, -1.0, 250e-12, 600.0, 30e-9, &grid, &q),
            Err(ModelError::NegativeWeight)
        ));
    }

    #[test]
    fn channels_off_leaves_pure_sfwm() {
        let m = model();
        // The plateau flatness needs the default grid: coarser spectral
        // resolution under-samples the narrow two-photon feature.
        let grid = SpectralGrid::default_model_grid();
        let q = VelocityQuadrature::default();
        let h = coincidence_profile(&m, &[], 900.0, 250e-12, 600.0, 30e-9, &grid, &q).unwrap();
        let total: f64 = h.counts.iter().sum();
        assert!(total > 0.0);
        // single central feature: with the channels off there is no side
        // structure; the ground-coherence plateau spans the whole window, so
        // the profile is flat to within the sub-bin ringing
        let max = h.counts.iter().cloned().fold(0.0, f64::max);
        let min = h.counts.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = total / h.n_bins() as f64;
        assert!(
            (max - min) / mean < 0.25,
            "pure SFWM window not flat: min {min} max {max}"
        );
    }

    #[test]
    fn segment_integral_matches_plain_trapezoid_on_grid_edges() {
        let dens = TemporalDensity::new(1.0, vec![1.0, 3.0, 2.0, 5.0, 4.0]);
        // full range: trapezoid = 0.5(1+3)+0.5(3+2)+0.5(2+5)+0.5(5+4)
        let exact = 0.5 * (1.0 + 3.0) + 0.5 * (3.0 + 2.0) + 0.5 * (2.0 + 5.0) + 0.5 * (5.0 + 4.0);
        let got = segment_integral(&dens, dens.tau_at(0), dens.tau_at(4));
        assert!((got - exact).abs() < 1e-12);
        // half-cell: integral of linear 1->3 over first half = 0.5*(1+2)/2
        let got = segment_integral(&dens, dens.tau_at(0), dens.tau_at(0) + 0.5);
        assert!((got - 0.75).abs() < 1e-12);
        // additivity
        let a = segment_integral(&dens, dens.tau_at(0), dens.tau_at(2) + 0.3);
        let b = segment_integral(&dens, dens.tau_at(2) + 0.3, dens.tau_at(4));
        assert!((a + b - exact).abs() < 1e-12);
    }

    #[test]
    fn amplitude_fit_recovers_scale() {
        let m = vec![1.0, 2.0, 3.0, 4.0];
        let r: Vec<f64> = m.iter().map(|v| 2.5 * v).collect();
        let a = fit_amplitude(&m, &r);
        assert!((a - 2.5).abs() < 1e-12);
        assert!(relative_rms(a, &m, &r) < 1e-12);
    }

    #[test]
    fn grid_too_small_for_window_rejected() {
        let m = model();
        let grid = SpectralGrid::new(2.0 * std::f64::consts::PI * 16e9, 1 << 8).unwrap();
        // ±30 ns window needs more than 256 * 62.5 ps / 2 = 8 ns of range.
        let channels: [ParasiticChannel; 0] = [];
        let err = coincidence_profile(&m, &channels, 1.0, 250e-12, 1.0, 30e-9, &grid, &VelocityQuadrature::default());
        assert!(err.is_err());
    }

    #[test]
    fn defaults_flow_through_medium_validation() {
        let mut bad = AtomicMedium::warm_rb85_defaults();
        bad.temperature_k = -1.0;
        assert!(SusceptibilityModel::new(bad, model().geometry.clone()).is_err());
    }
}
