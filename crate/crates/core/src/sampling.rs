//! Boundary and forcing samplers built on truncated Fourier series.
//!
//! Edge functions:
//! `g(t) = m + (A/√K) Σ_{κ=1..K} [a_κ cos(2πκt) + b_κ sin(2πκt)]`,
//! so `A` is the pointwise standard deviation.
//!
//! Forcing:
//! `f(x,y) = (A/K) Σ_{κ,λ=1..K} [a_{κλ} sin(πκx) sin(πλy) + b_{κλ} cos(πκx) cos(πλy)]`.
//!
//! Coefficients are standard normal and drawn in the order they appear in
//! the sums (`a_1, b_1, a_2, …`; `κ` outer, `λ` inner, `a` before `b`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{BoundarySpec, EdgeFunction, Field2D, Grid};
use crate::rng::SampleRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDistribution {
    pub bandwidth: usize,
    pub amplitude: f64,
    pub mean_shift: f64,
}

impl EdgeDistribution {
    pub fn new(bandwidth: usize, amplitude: f64, mean_shift: f64) -> Result<Self> {
        let d = EdgeDistribution {
            bandwidth,
            amplitude,
            mean_shift,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidth < 1 {
            return Err(LabError::InvalidConfig("edge bandwidth must be >= 1".into()));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(LabError::InvalidConfig(
                "edge amplitude must be finite and >= 0".into(),
            ));
        }
        if !self.mean_shift.is_finite() {
            return Err(LabError::InvalidConfig("edge mean shift must be finite".into()));
        }
        Ok(())
    }
}

/// Boundary-condition distribution: one edge law for both Dirichlet edges,
/// one for both Neumann edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryDistribution {
    pub label: String,
    pub dirichlet: EdgeDistribution,
    pub neumann: EdgeDistribution,
}

impl BoundaryDistribution {
    /// Training distribution `B0`: zero-mean edges.
    pub fn b0() -> Self {
        BoundaryDistribution {
            label: "b0".into(),
            dirichlet: EdgeDistribution {
                bandwidth: 6,
                amplitude: 1.0,
                mean_shift: 0.0,
            },
            neumann: EdgeDistribution {
                bandwidth: 6,
                amplitude: 0.5,
                mean_shift: 0.0,
            },
        }
    }

    /// Shifted distribution `B1`.
    pub fn b1() -> Self {
        BoundaryDistribution {
            label: "b1".into(),
            dirichlet: EdgeDistribution {
                bandwidth: 6,
                amplitude: 1.0,
                mean_shift: 0.6,
            },
            neumann: EdgeDistribution {
                bandwidth: 6,
                amplitude: 0.8,
                mean_shift: 0.2,
            },
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "b0" => Ok(Self::b0()),
            "b1" => Ok(Self::b1()),
            other => Err(LabError::InvalidConfig(format!(
                "unknown boundary distribution {other:?} (expected b0 or b1)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dirichlet.validate()?;
        self.neumann.validate()
    }

    /// Copy with the Dirichlet bandwidth replaced by `k`.
    pub fn with_dirichlet_bandwidth(&self, k: usize) -> Result<Self> {
        if k < 1 {
            return Err(LabError::InvalidConfig("bandwidth must be >= 1".into()));
        }
        let mut out = self.clone();
        out.dirichlet.bandwidth = k;
        Ok(out)
    }

    /// Copy with both amplitudes set to zero (only the means remain).
    pub fn without_fluctuations(&self) -> Self {
        let mut out = self.clone();
        out.dirichlet.amplitude = 0.0;
        out.neumann.amplitude = 0.0;
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingDistribution {
    pub bandwidth: usize,
    pub amplitude: f64,
}

impl Default for ForcingDistribution {
    fn default() -> Self {
        ForcingDistribution {
            bandwidth: 6,
            amplitude: 3.0,
        }
    }
}

impl ForcingDistribution {
    pub fn validate(&self) -> Result<()> {
        if self.bandwidth < 1 {
            return Err(LabError::InvalidConfig("forcing bandwidth must be >= 1".into()));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(LabError::InvalidConfig(
                "forcing amplitude must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Draws `2K` coefficients and evaluates the edge series at `t_k = k·h`.
pub fn sample_edge_function(dist: &EdgeDistribution, rng: &mut SampleRng, grid: Grid) -> EdgeFunction {
    let coeffs: Vec<(f64, f64)> = (0..dist.bandwidth)
        .map(|_| {
            let a = rng.normal();
            let b = rng.normal();
            (a, b)
        })
        .collect();
    edge_series(dist, &coeffs, grid)
}

/// Evaluates the edge series for explicit `(a_κ, b_κ)` coefficients.
pub fn edge_series(dist: &EdgeDistribution, coeffs: &[(f64, f64)], grid: Grid) -> EdgeFunction {
    let scale = dist.amplitude / (dist.bandwidth as f64).sqrt();
    let values = (0..grid.n())
        .map(|k| {
            let t = grid.coord(k);
            let mut s = 0.0;
            for (kappa, &(a, b)) in coeffs.iter().enumerate() {
                let w = 2.0 * PI * (kappa + 1) as f64 * t;
                s += a * w.cos() + b * w.sin();
            }
            dist.mean_shift + scale * s
        })
        .collect();
    EdgeFunction::from_raw(grid, values)
}

/// Draws the four edges in the order `g_L, g_B, h_R, h_T`.
pub fn sample_boundary(dist: &BoundaryDistribution, rng: &mut SampleRng, grid: Grid) -> BoundarySpec {
    let g_left = sample_edge_function(&dist.dirichlet, rng, grid);
    let g_bottom = sample_edge_function(&dist.dirichlet, rng, grid);
    let h_right = sample_edge_function(&dist.neumann, rng, grid);
    let h_top = sample_edge_function(&dist.neumann, rng, grid);
    BoundarySpec {
        g_left,
        g_bottom,
        h_right,
        h_top,
    }
}

/// Draws `2K²` coefficients and evaluates the forcing series on the grid.
pub fn sample_forcing(dist: &ForcingDistribution, rng: &mut SampleRng, grid: Grid) -> Field2D {
    let k = dist.bandwidth;
    let coeffs: Vec<(f64, f64)> = (0..k * k)
        .map(|_| {
            let a = rng.normal();
            let b = rng.normal();
            (a, b)
        })
        .collect();
    forcing_series(dist, &coeffs, grid)
}

/// Evaluates the forcing series for explicit coefficients indexed
/// `κ·K + λ` (zero-based).
pub fn forcing_series(dist: &ForcingDistribution, coeffs: &[(f64, f64)], grid: Grid) -> Field2D {
    let n = grid.n();
    let k = dist.bandwidth;
    assert_eq!(coeffs.len(), k * k);
    // sin/cos tables: table[m][i] for mode m+1 at node i.
    let table = |f: fn(f64) -> f64| -> Vec<Vec<f64>> {
        (1..=k)
            .map(|m| (0..n).map(|i| f(PI * m as f64 * grid.coord(i))).collect())
            .collect()
    };
    let sin_t = table(f64::sin);
    let cos_t = table(f64::cos);
    let mut values = vec![0.0; n * n];
    for kappa in 0..k {
        for lambda in 0..k {
            let (a, b) = coeffs[kappa * k + lambda];
            let (sx, cx) = (&sin_t[kappa], &cos_t[kappa]);
            let (sy, cy) = (&sin_t[lambda], &cos_t[lambda]);
            for i in 0..n {
                let row = &mut values[i * n..(i + 1) * n];
                let (asx, bcx) = (a * sx[i], b * cx[i]);
                for j in 0..n {
                    row[j] += asx * sy[j] + bcx * cy[j];
                }
            }
        }
    }
    let scale = dist.amplitude / k as f64;
    for v in &mut values {
        *v *= scale;
    }
    Field2D::from_raw(grid, values)
}

/// Adds `delta` to both Dirichlet edges; Neumann edges are untouched.
pub fn shift_dirichlet(spec: &BoundarySpec, delta: f64) -> BoundarySpec {
    BoundarySpec {
        g_left: spec.g_left.offset(delta),
        g_bottom: spec.g_bottom.offset(delta),
        h_right: spec.h_right.clone(),
        h_top: spec.h_top.clone(),
    }
}

/// One problem instance `(f, B)` from a single stream: the forcing is drawn
/// first, then the four edges.
pub fn sample_problem(
    forcing: &ForcingDistribution,
    boundary: &BoundaryDistribution,
    master_seed: u64,
    stream_index: u64,
    grid: Grid,
) -> (Field2D, BoundarySpec) {
    let mut rng = SampleRng::new(master_seed, stream_index);
    let f = sample_forcing(forcing, &mut rng, grid);
    let bc = sample_boundary(boundary, &mut rng, grid);
    (f, bc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid64() -> Grid {
        Grid::new(64).unwrap()
    }

    #[test]
    fn zero_amplitude_edge_is_constant() {
        let d = EdgeDistribution::new(6, 0.0, 0.37).unwrap();
        let e = sample_edge_function(&d, &mut SampleRng::new(7, 0), grid64());
        assert!(e.values().iter().all(|&v| v == 0.37));
    }

    #[test]
    fn zero_mean_edge_has_zero_discrete_average() {
        let d = EdgeDistribution::new(6, 1.0, 0.0).unwrap();
        let g = grid64();
        for stream in 0..20 {
            let e = sample_edge_function(&d, &mut SampleRng::new(7, stream), g);
            // Brute-force sum over one period, dropping the duplicated endpoint.
            let avg: f64 = e.values()[..g.n() - 1].iter().sum::<f64>() / (g.n() - 1) as f64;
            assert!(avg.abs() < 1e-5 * d.amplitude, "stream {stream}: {avg}");
        }
    }

    #[test]
    fn edge_pointwise_std_matches_amplitude() {
        let d = BoundaryDistribution::b0().dirichlet;
        let g = grid64();
        let samples = 10_000;
        let mut s = vec![0.0; g.n()];
        let mut s2 = vec![0.0; g.n()];
        for stream in 0..samples {
            let e = sample_edge_function(&d, &mut SampleRng::new(7, stream), g);
            for (k, &v) in e.values().iter().enumerate() {
                s[k] += v;
                s2[k] += v * v;
            }
        }
        for k in 0..g.n() {
            let mean = s[k] / samples as f64;
            let std = (s2[k] / samples as f64 - mean * mean).sqrt();
            assert!((std - 1.0).abs() < 0.05, "node {k}: std {std}");
        }
    }

    #[test]
    fn edge_spectrum_is_band_limited() {
        let g = grid64();
        let p = g.n() - 1;
        for (k_band, amp) in [(6usize, 1.0), (12, 0.8), (1, 2.0)] {
            let d = EdgeDistribution::new(k_band, amp, 0.3).unwrap();
            let e = sample_edge_function(&d, &mut SampleRng::new(3, k_band as u64), g);
            // Brute-force DFT over the n-1 periodized samples.
            for q in 0..p {
                let freq = q.min(p - q);
                if freq <= k_band {
                    continue;
                }
                let (mut re, mut im) = (0.0, 0.0);
                for (k, &v) in e.values()[..p].iter().enumerate() {
                    let w = 2.0 * PI * (q * k) as f64 / p as f64;
                    re += v * w.cos();
                    im -= v * w.sin();
                }
                let mag = (re * re + im * im).sqrt() / p as f64;
                assert!(mag < 1e-4 * amp, "K={k_band} q={q} |X|={mag}");
            }
        }
    }

    #[test]
    fn boundary_with_zero_amplitudes() {
        let g = grid64();
        let b0 = sample_boundary(&BoundaryDistribution::b0().without_fluctuations(), &mut SampleRng::new(7, 0), g);
        assert_eq!(b0, BoundarySpec::zeros(g));
        let b1 = sample_boundary(&BoundaryDistribution::b1().without_fluctuations(), &mut SampleRng::new(7, 0), g);
        for e in [&b1.g_left, &b1.g_bottom] {
            assert!(e.values().iter().all(|&v| v == 0.6));
        }
        for e in [&b1.h_right, &b1.h_top] {
            assert!(e.values().iter().all(|&v| v == 0.2));
        }
    }

    #[test]
    fn boundary_sampling_is_deterministic() {
        let g = grid64();
        let d = BoundaryDistribution::b1();
        let a = sample_boundary(&d, &mut SampleRng::new(7, 0), g);
        let b = sample_boundary(&d, &mut SampleRng::new(7, 0), g);
        let bits = |s: &BoundarySpec| -> Vec<u64> {
            [&s.g_left, &s.g_bottom, &s.h_right, &s.h_top]
                .iter()
                .flat_map(|e| e.values().iter().map(|v| v.to_bits()))
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(a.g_left, a.g_bottom);
    }

    #[test]
    fn forcing_zero_amplitude() {
        let d = ForcingDistribution {
            bandwidth: 6,
            amplitude: 0.0,
        };
        let f = sample_forcing(&d, &mut SampleRng::new(7, 0), grid64());
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forcing_single_mode_closed_form() {
        let d = ForcingDistribution {
            bandwidth: 1,
            amplitude: 1.0,
        };
        let g = Grid::new(65).unwrap();
        let f = forcing_series(&d, &[(1.0, 0.0)], g);
        assert!((f.at(32, 32) - 1.0).abs() < 1e-15);
        assert!(f.at(0, 17).abs() < 1e-15);
    }

    /// Expected mean-square of the forcing over the grid, by direct summation
    /// of squared basis functions over the nodes.
    fn forcing_mean_square_oracle(d: &ForcingDistribution, g: Grid) -> f64 {
        let n = g.n();
        let k = d.bandwidth;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (g.coord(i), g.coord(j));
                for kappa in 1..=k {
                    for lambda in 1..=k {
                        let s = (PI * kappa as f64 * x).sin() * (PI * lambda as f64 * y).sin();
                        let c = (PI * kappa as f64 * x).cos() * (PI * lambda as f64 * y).cos();
                        total += s * s + c * c;
                    }
                }
            }
        }
        (d.amplitude / k as f64).powi(2) * total / (n * n) as f64
    }

    #[test]
    fn forcing_rms_matches_quadrature_oracle() {
        let d = ForcingDistribution::default();
        let g = grid64();
        let expected_rms = forcing_mean_square_oracle(&d, g).sqrt();
        let samples = 1000;
        let ms: f64 = (0..samples)
            .map(|s| {
                let f = sample_forcing(&d, &mut SampleRng::new(7, s), g);
                f.rms().powi(2)
            })
            .sum::<f64>()
            / samples as f64;
        let rms = ms.sqrt();
        assert!(
            (rms / expected_rms - 1.0).abs() < 0.05,
            "empirical {rms} vs oracle {expected_rms}"
        );
    }

    #[test]
    fn shift_dirichlet_cases() {
        let g = grid64();
        let spec = sample_boundary(&BoundaryDistribution::b0(), &mut SampleRng::new(7, 1), g);
        assert_eq!(shift_dirichlet(&spec, 0.0), spec);
        let back = shift_dirichlet(&shift_dirichlet(&spec, 0.5), -0.5);
        // One rounding of v + 0.5 at most.
        for (a, b) in back.g_left.values().iter().zip(spec.g_left.values()) {
            assert!((a - b).abs() <= f64::EPSILON * b.abs().max(1.0));
        }
        let zero = shift_dirichlet(&BoundarySpec::zeros(g), 1.0);
        assert!(zero.g_left.values().iter().all(|&v| v == 1.0));
        assert!(zero.g_bottom.values().iter().all(|&v| v == 1.0));
        assert!(zero.h_right.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bandwidth_override() {
        let b0 = BoundaryDistribution::b0();
        assert_eq!(b0.with_dirichlet_bandwidth(6).unwrap(), b0);
        let k12 = b0.with_dirichlet_bandwidth(12).unwrap();
        assert_eq!(k12.dirichlet.bandwidth, 12);
        assert_eq!(k12.neumann.bandwidth, 6);
        assert!(b0.with_dirichlet_bandwidth(0).is_err());
    }

    #[test]
    fn presets_by_name() {
        assert_eq!(BoundaryDistribution::preset("b1").unwrap().dirichlet.mean_shift, 0.6);
        assert!(BoundaryDistribution::preset("b2").is_err());
        assert!(EdgeDistribution::new(0, 1.0, 0.0).is_err());
        assert!(EdgeDistribution::new(3, -1.0, 0.0).is_err());
    }
}
