//! Uniform detuning grids and their Fourier-dual temporal amplitudes.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::ModelError;

/// Uniform angular-frequency grid centered on δ = 0.
///
/// Index k maps to δ_k = (k − n/2)·(span/n); the Fourier-dual τ grid has
/// step 2π/span and index m maps to τ_m = (m − n/2)·τ_step.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    span_rad_s: f64,
    n_points: usize,
}

impl SpectralGrid {
    pub fn new(span_rad_s: f64, n_points: usize) -> Result<Self, ModelError> {
        if !(span_rad_s > 0.0) {
            return Err(ModelError::InvalidInput(format!(
                "grid span must be positive, got {span_rad_s}"
            )));
        }
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(ModelError::InvalidInput(format!(
                "grid size must be a power of two >= 2, got {n_points}"
            )));
        }
        Ok(SpectralGrid {
            span_rad_s,
            n_points,
        })
    }

    /// Default model grid: 2¹⁴ points over 2π·16 GHz, giving a 62.5 ps τ
    /// step over ±512 ns.
    pub fn default_model_grid() -> Self {
        SpectralGrid {
            span_rad_s: 2.0 * PI * 16e9,
            n_points: 1 << 14,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn span_rad_s(&self) -> f64 {
        self.span_rad_s
    }

    pub fn delta_step(&self) -> f64 {
        self.span_rad_s / self.n_points as f64
    }

    pub fn delta_at(&self, k: usize) -> f64 {
        (k as f64 - (self.n_points / 2) as f64) * self.delta_step()
    }

    pub fn tau_step(&self) -> f64 {
        2.0 * PI / self.span_rad_s
    }

    pub fn tau_at(&self, m: usize) -> f64 {
        (m as f64 - (self.n_points / 2) as f64) * self.tau_step()
    }

    pub fn deltas(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.delta_at(k)).collect()
    }

    /// Synthesize ψ(τ_m) = (Δδ/2π) Σ_k g(δ_k) e^{−iδ_k τ_m} by FFT.
    ///
    /// With both grids centered the transform reduces to a forward FFT with
    /// alternating-sign pre/post twiddles (n ≡ 0 mod 4).
    pub fn synthesize(&self, spectrum: &[Complex64]) -> Result<TemporalAmplitude, ModelError> {
        if spectrum.len() != self.n_points {
            return Err(ModelError::InvalidInput(format!(
                "spectrum length {} does not match grid size {}",
                spectrum.len(),
                self.n_points
            )));
        }
        let n = self.n_points;
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(k, &g)| if k % 2 == 1 { -g } else { g })
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = self.delta_step() / (2.0 * PI);
        for (m, v) in buf.iter_mut().enumerate() {
            *v *= if m % 2 == 1 { -scale } else { scale };
        }
        Ok(TemporalAmplitude {
            tau_step_s: self.tau_step(),
            values: buf,
        })
    }
}

/// Complex temporal amplitude ψ(τ) on the grid dual to a [`SpectralGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalAmplitude {
    tau_step_s: f64,
    values: Vec<Complex64>,
}

impl TemporalAmplitude {
    pub fn tau_step_s(&self) -> f64 {
        self.tau_step_s
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tau_at(&self, m: usize) -> f64 {
        (m as f64 - (self.values.len() / 2) as f64) * self.tau_step_s
    }

    /// |ψ(τ)|² as a real density.
    pub fn density(&self) -> TemporalDensity {
        TemporalDensity {
            tau_step_s: self.tau_step_s,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// Σ|ψ|²·Δτ over the whole grid.
    pub fn total_power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.tau_step_s
    }
}

/// Real nonnegative density p(τ) on a centered τ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalDensity {
    tau_step_s: f64,
    values: Vec<f64>,
}

impl TemporalDensity {
    pub fn new(tau_step_s: f64, values: Vec<f64>) -> Self {
        TemporalDensity { tau_step_s, values }
    }

    pub fn tau_step_s(&self) -> f64 {
        self.tau_step_s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tau_at(&self, m: usize) -> f64 {
        (m as f64 - (self.values.len() / 2) as f64) * self.tau_step_s
    }

    /// Index of the grid point closest to τ.
    pub fn index_of_tau(&self, tau_s: f64) -> usize {
        let n = self.values.len();
        let raw = (tau_s / self.tau_step_s).round() as i64 + (n / 2) as i64;
        raw.clamp(0, n as i64 - 1) as usize
    }

    /// Even-symmetrize about the grid point at `center_tau_s`: averages each
    /// sample with its reflection (cyclic; the wrap only touches edge samples
    /// that the leakage precondition already forces to be negligible).
    pub fn symmetrize_about(&mut self, center_tau_s: f64) {
        let n = self.values.len() as i64;
        let c = self.index_of_tau(center_tau_s) as i64;
        let old = self.values.clone();
        for m in 0..n {
            let r = (2 * c - m).rem_euclid(n) as usize;
            self.values[m as usize] = 0.5 * (old[m as usize] + old[r]);
        }
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.tau_step_s
    }

    pub fn peak_index(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Full width at half maximum of the density, walking outward from the
    /// peak; the walk clamps at the grid edges when the half-max level is
    /// never crossed there.
    pub fn fwhm(&self) -> f64 {
        let n = self.values.len();
        if n == 0 {
            return 0.0;
        }
        let pk = self.peak_index();
        let half = self.values[pk] / 2.0;
        let mut r = pk;
        while r + 1 < n && self.values[r] >= half {
            r += 1;
        }
        let mut l = pk;
        while l > 0 && self.values[l] >= half {
            l -= 1;
        }
        ((r - l).saturating_sub(1)) as f64 * self.tau_step_s
    }
}

/// Direct O(n·m) evaluation of ψ(τ) = (Δδ/2π) Σ_k g(δ_k) e^{−iδ_kτ} at
/// selected τ indices; the independent check for the FFT path.
pub fn direct_dft(grid: &SpectralGrid, spectrum: &[Complex64], tau_indices: &[usize]) -> Vec<Complex64> {
    let scale = grid.delta_step() / (2.0 * PI);
    tau_indices
        .iter()
        .map(|&m| {
            let tau = grid.tau_at(m);
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &g) in spectrum.iter().enumerate() {
                let phase = -grid.delta_at(k) * tau;
                acc += g * Complex64::new(phase.cos(), phase.sin());
            }
            acc * scale
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(SpectralGrid::new(0.0, 8).is_err());
        assert!(SpectralGrid::new(1.0, 3).is_err());
        assert!(SpectralGrid::new(1.0, 1).is_err());
        let g = SpectralGrid::default_model_grid();
        assert_eq!(g.n_points(), 16384);
        assert!((g.tau_step() - 62.5e-12).abs() < 1e-24);
        assert_eq!(g.delta_at(g.n_points() / 2), 0.0);
    }

    #[test]
    fn constant_spectrum_gives_discrete_delta() {
        let g = SpectralGrid::new(2.0 * PI * 1e9, 256).unwrap();
        let spec = vec![Complex64::new(1.0, 0.0); 256];
        let psi = g.synthesize(&spec).unwrap();
        let dens = psi.density();
        assert_eq!(dens.peak_index(), 128); // tau = 0
        let peak = dens.values()[128];
        for (m, &v) in dens.values().iter().enumerate() {
            if m != 128 {
                assert!(v < peak * 1e-24, "sidelobe at {m}: {v}");
            }
        }
    }

    #[test]
    fn fft_matches_direct_dft_and_parseval() {
        let g = SpectralGrid::new(2.0 * PI * 4e9, 1024).unwrap();
        // deterministic non-trivial spectrum
        let spec: Vec<Complex64> = (0..1024)
            .map(|k| {
                let x = g.delta_at(k) / 1e9;
                Complex64::new((-x * x / 8.0).exp(), 0.0)
                    * Complex64::new((0.3 * x).cos(), (0.7 * x).sin())
            })
            .collect();
        let psi = g.synthesize(&spec).unwrap();
        let idx: Vec<usize> = (0..64).map(|i| i * 16 + 3).collect();
        let direct = direct_dft(&g, &spec, &idx);
        // differences measured against the peak amplitude: pointwise-relative
        // comparison is meaningless where psi is numerically zero
        let peak = psi.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (j, &m) in idx.iter().enumerate() {
            let rel = (psi.values()[m] - direct[j]).norm() / peak;
            assert!(rel < 1e-9, "index {m}: rel-to-peak {rel}");
        }
        let lhs = spec.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.delta_step() / (2.0 * PI);
        let rhs = psi.total_power();
        assert!(((lhs - rhs) / lhs).abs() < 1e-9);
    }

    #[test]
    fn symmetrize_produces_even_density() {
        let g = SpectralGrid::new(2.0 * PI * 2e9, 128).unwrap();
        let spec: Vec<Complex64> = (0..128)
            .map(|k| Complex64::new(0.0, g.delta_at(k) / 1e9).exp())
            .collect();
        let mut dens = g.synthesize(&spec).unwrap().density();
        dens.symmetrize_about(0.0);
        let n = dens.len();
        for m in 1..n {
            let r = n - m;
            if r < n {
                assert!((dens.values()[m] - dens.values()[r % n]).abs() < 1e-18);
            }
        }
    }
}
