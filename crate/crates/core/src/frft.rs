//! Fractional Fourier transform
//!
//! `F_theta f(xi) = sqrt(1 - i cot theta) * integral f(x) exp(i pi ((x^2 + xi^2) cot theta - 2 x xi csc theta)) dx`
//!
//! On atoms the kernel factors into chirp multiplication, a scaled Fourier
//! transform and a second chirp multiplication, so the transform is exact.
//! Sampled signals use direct O(N^2) trapezoidal quadrature on the input grid.

use crate::error::{Error, Result};
use crate::window_algebra::GaussianAtom;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Below this `|sin theta|` the numeric kernel snaps to identity or reflection.
pub const SINGULAR_SIN: f64 = 1e-3;

/// Uniformly sampled function on `x0 + k dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<C64>,
    x0: f64,
    dx: f64,
}

impl SampledSignal {
    pub fn new(samples: Vec<C64>, x0: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::Grid(format!("grid step must be positive, got {dx}")));
        }
        if samples.len() < 2 {
            return Err(Error::Grid("a sampled signal needs at least 2 samples".into()));
        }
        Ok(SampledSignal { samples, x0, dx })
    }

    /// Samples `f` on `nodes` points spanning `[-half_width, half_width]`.
    pub fn symmetric<F: Fn(f64) -> C64>(f: F, half_width: f64, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Grid("a sampled signal needs at least 2 samples".into()));
        }
        let dx = 2.0 * half_width / (nodes - 1) as f64;
        let samples = (0..nodes).map(|k| f(-half_width + k as f64 * dx)).collect();
        SampledSignal::new(samples, -half_width, dx)
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    fn weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.samples.len() {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    /// Trapezoidal L2 norm.
    pub fn l2_norm(&self) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(k, s)| self.weight(k) * s.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Trapezoidal L2 distance to `f` sampled on the same grid.
    pub fn l2_distance_to<F: Fn(f64) -> C64>(&self, f: F) -> f64 {
        self.samples
            .iter()
            .enumerate()
            .map(|(k, s)| self.weight(k) * (s - f(self.x(k))).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn is_symmetric(&self) -> bool {
        let last = self.x(self.samples.len() - 1);
        (last + self.x0).abs() <= 1e-9 * self.dx
    }
}

enum Reduced {
    Identity,
    Fourier,
    Reflection,
    InverseFourier,
    General(f64),
}

fn reduce(theta: f64) -> Reduced {
    let t = theta.rem_euclid(TAU);
    let quarter = t / FRAC_PI_2;
    let k = quarter.round();
    if (quarter - k).abs() < 1e-12 {
        return match (k as i64).rem_euclid(4) {
            0 => Reduced::Identity,
            1 => Reduced::Fourier,
            2 => Reduced::Reflection,
            _ => Reduced::InverseFourier,
        };
    }
    Reduced::General(t)
}

fn kernel_atom(g: &GaussianAtom, theta: f64) -> GaussianAtom {
    let cot = theta.cos() / theta.sin();
    let csc = 1.0 / theta.sin();
    let prefactor = C64::new(1.0, -cot).sqrt();
    // e^{i pi x^2 cot} = h_{-cot}
    g.multiply_chirp(-cot)
        .fourier()
        .rescale(csc)
        .multiply_chirp(-cot)
        .scale(prefactor)
}

/// Exact `F_theta g` for an atom.
pub fn frft_atom(g: &GaussianAtom, theta: f64) -> GaussianAtom {
    match reduce(theta) {
        Reduced::Identity => *g,
        Reduced::Fourier => g.fourier(),
        Reduced::Reflection => g.reflect(),
        Reduced::InverseFourier => g.inverse_fourier(),
        Reduced::General(t) => {
            // F_t = F_{t - pi/2} F_{pi/2} keeps the kernel away from sin t = 0.
            if t.sin().abs() < 0.5 {
                kernel_atom(&g.fourier(), t - FRAC_PI_2)
            } else {
                kernel_atom(g, t)
            }
        }
    }
}

/// `F_theta f` by direct quadrature, sampled on the input grid.
pub fn frft_numeric(f: &SampledSignal, theta: f64) -> Result<SampledSignal> {
    let t = theta.rem_euclid(TAU);
    if t.sin().abs() < SINGULAR_SIN {
        let near_pi = (t - PI).abs() < FRAC_PI_2;
        if !near_pi {
            return Ok(f.clone());
        }
        if !f.is_symmetric() {
            return Err(Error::Grid("reflection needs a grid symmetric about 0".into()));
        }
        let mut samples = f.samples.clone();
        samples.reverse();
        return SampledSignal::new(samples, f.x0, f.dx);
    }
    let cot = t.cos() / t.sin();
    let csc = 1.0 / t.sin();
    let n = f.len();
    let x_edge = f.x0.abs().max(f.x(n - 1).abs());
    let phase_step = 2.0 * PI * (x_edge * cot.abs() + x_edge * csc.abs()) * f.dx;
    if phase_step > FRAC_PI_2 {
        return Err(Error::Grid(format!(
            "kernel phase advances {phase_step:.3} rad per step at the grid edge (limit pi/2)"
        )));
    }
    let prefactor = C64::new(1.0, -cot).sqrt();
    let weighted: Vec<C64> = (0..n)
        .map(|k| {
            let x = f.x(k);
            f.samples[k] * f.weight(k) * C64::from_polar(1.0, PI * x * x * cot)
        })
        .collect();
    let out: Vec<C64> = (0..n)
        .into_par_iter()
        .map(|m| {
            let xi = f.x(m);
            let mut acc = C64::new(0.0, 0.0);
            for (k, w) in weighted.iter().enumerate() {
                acc += w * C64::from_polar(1.0, -2.0 * PI * f.x(k) * xi * csc);
            }
            prefactor * C64::from_polar(1.0, PI * xi * xi * cot) * acc
        })
        .collect();
    SampledSignal::new(out, f.x0, f.dx)
}

/// Scalar `c` with `pi(z) F_theta = c F_theta pi(R_theta z)` for `z = (a, b)`.
pub fn commutation_phase(a: f64, b: f64, theta: f64) -> C64 {
    let (s, _) = theta.sin_cos();
    let arg = (b * b - a * a) * (2.0 * theta).sin() / 4.0 - a * b * s * s;
    C64::from_polar(1.0, -2.0 * PI * arg)
}
