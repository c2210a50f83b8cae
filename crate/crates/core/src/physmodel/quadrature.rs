//! Velocity averaging over the 1D Maxwell-Boltzmann distribution.
//!
//! The model's susceptibilities are thermal averages ∫ dv f(v) g(v). The
//! Gaussian weight makes Gauss-Hermite the natural rule (substituting
//! v = v̄·x turns the average into (1/√π) Σ wᵢ g(v̄ xᵢ)); a dense trapezoid
//! rule over ±span·v̄ is kept as the independent verification quadrature.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::medium::AtomicMedium;
use super::ModelError;

/// Maxwell-Boltzmann probability density f(v) = √(m/2πk_BT)·exp(−mv²/2k_BT).
///
/// Units s/m; even in v and normalized to unit integral.
pub fn maxwell_boltzmann_pdf(v_m_s: f64, medium: &AtomicMedium) -> Result<f64, ModelError> {
    if !v_m_s.is_finite() {
        return Err(ModelError::InvalidInput(format!(
            "velocity must be finite, got {v_m_s}"
        )));
    }
    let a = medium.atomic_mass_kg / (2.0 * crate::constants::KB * medium.temperature_k);
    Ok((a / PI).sqrt() * (-a * v_m_s * v_m_s).exp())
}

/// Quadrature rule used for velocity averages.
#[derive(Debug, Clone, PartialEq)]
pub enum VelocityQuadrature {
    /// Gauss-Hermite with the given node count (default path, 64 nodes).
    GaussHermite { nodes: usize },
    /// Uniform trapezoid over ±half_span_vbar·v̄ (verification path).
    Trapezoid { points: usize, half_span_vbar: f64 },
}

impl Default for VelocityQuadrature {
    fn default() -> Self {
        VelocityQuadrature::GaussHermite { nodes: 64 }
    }
}

impl VelocityQuadrature {
    /// The trapezoid oracle at the parameters used throughout the tests.
    pub fn trapezoid_oracle() -> Self {
        VelocityQuadrature::Trapezoid {
            points: 4001,
            half_span_vbar: 6.0,
        }
    }

    /// A refined version of this rule, for convergence checks.
    pub fn refined(&self) -> Self {
        match *self {
            VelocityQuadrature::GaussHermite { nodes } => VelocityQuadrature::GaussHermite {
                nodes: nodes + nodes / 2,
            },
            VelocityQuadrature::Trapezoid {
                points,
                half_span_vbar,
            } => VelocityQuadrature::Trapezoid {
                points: 2 * points - 1,
                half_span_vbar,
            },
        }
    }

    /// Thermal average ⟨g⟩ = ∫ dv f(v) g(v) for a complex-valued kernel.
    pub fn average<F>(&self, medium: &AtomicMedium, g: F) -> Complex64
    where
        F: Fn(f64) -> Complex64,
    {
        let vbar = medium.most_probable_speed();
        match *self {
            VelocityQuadrature::GaussHermite { nodes } => {
                let rule = cached_gauss_hermite(nodes);
                let mut acc = Complex64::new(0.0, 0.0);
                for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                    acc += w * g(vbar * x);
                }
                acc / PI.sqrt()
            }
            VelocityQuadrature::Trapezoid {
                points,
                half_span_vbar,
            } => {
                let n = points.max(2);
                let lo = -half_span_vbar * vbar;
                let h = 2.0 * half_span_vbar * vbar / (n - 1) as f64;
                let a = medium.atomic_mass_kg
                    / (2.0 * crate::constants::KB * medium.temperature_k);
                let norm = (a / PI).sqrt();
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    let v = lo + i as f64 * h;
                    let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    acc += w * norm * (-a * v * v).exp() * g(v);
                }
                acc * h
            }
        }
    }
}

/// Gauss-Hermite nodes and weights for ∫ e^{−x²} p(x) dx ≈ Σ wᵢ p(xᵢ).
#[derive(Debug, Clone)]
pub struct GaussHermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Rules are deterministic per node count; grid sweeps reuse them heavily.
fn cached_gauss_hermite(n: usize) -> std::sync::Arc<GaussHermiteRule> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermiteRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n)
        .or_insert_with(|| Arc::new(gauss_hermite(n)))
        .clone()
}

/// Compute the n-point Gauss-Hermite rule (physicists' weight e^{−x²}).
///
/// Golub-Welsch: nodes are the eigenvalues of the symmetric tridiagonal
/// Jacobi matrix with off-diagonals √(k/2), polished by Newton iteration on
/// the orthonormal Hermite recurrence; weights follow from
/// wᵢ = 1/(n·ĥ²ₙ₋₁(xᵢ)).
pub fn gauss_hermite(n: usize) -> GaussHermiteRule {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
    if n == 1 {
        return GaussHermiteRule {
            nodes: vec![0.0],
            weights: vec![PI.sqrt()],
        };
    }
    let d = vec![0.0; n];
    let e: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let mut nodes = tridiagonal_eigenvalues(d, e);
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // Newton polish: hn(x) = 0 with h'n(x) = √(2n)·h_{n-1}(x).
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = nodes[i];
        for _ in 0..3 {
            let (hn, hn1) = hermite_orthonormal(n, x);
            let dh = (2.0 * n as f64).sqrt() * hn1;
            if dh != 0.0 {
                x -= hn / dh;
            }
        }
        nodes[i] = x;
        let (_, hn1) = hermite_orthonormal(n, x);
        weights[i] = 1.0 / (n as f64 * hn1 * hn1);
    }
    // Enforce the exact ± symmetry of the rule.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussHermiteRule { nodes, weights }
}

/// Orthonormal Hermite values (ĥ_n(x), ĥ_{n−1}(x)) by upward recurrence.
fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64) {
    let mut hm = 0.0;
    let mut h = PI.powf(-0.25);
    for k in 0..n {
        let kf = k as f64;
        let hn = x * (2.0 / (kf + 1.0)).sqrt() * h - (kf / (kf + 1.0)).sqrt() * hm;
        hm = h;
        h = hn;
    }
    (h, hm)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL.
fn tridiagonal_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Vec<f64> {
    let n = d.len();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if i == l {
                    d[l] -= p;
                    e[l] = g;
                    e[m] = 0.0;
                }
            }
        }
    }
    d
}
