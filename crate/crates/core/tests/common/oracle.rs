//! Independent numerical oracles used by unit, integration and acceptance tests.
//!
//! Nothing here calls into the closed-form code paths; every routine works
//! from pointwise evaluations only.
#![allow(dead_code)]

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).norm())
}

/// Adaptive Gauss-Kronrod quadrature of a complex integrand on [a, b].
pub fn integrate<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, tol: f64) -> C64 {
    let mut total = C64::new(0.0, 0.0);
    let mut stack = vec![(a, b, 0u32)];
    let width = b - a;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        let local_tol = tol * (hi - lo) / width;
        if err <= local_tol.max(1e-300) || depth >= 40 {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// Integral over the real line of a function with Gaussian decay; the
/// interval is [-8, 8], widened to [-16, 16] for slowly decaying integrands.
pub fn integrate_line<F: Fn(f64) -> C64>(f: F, slow_decay: bool) -> C64 {
    let half = if slow_decay { 16.0 } else { 8.0 };
    // Splitting keeps each panel smooth enough for the local error estimate.
    let pieces = 32;
    let step = 2.0 * half / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = -half + i as f64 * step;
            integrate(&f, lo, lo + step, 1e-13)
        })
        .sum()
}

/// Fourier transform at one frequency by quadrature.
pub fn fourier_at<F: Fn(f64) -> C64>(f: F, xi: f64) -> C64 {
    integrate_line(|x| f(x) * C64::from_polar(1.0, -2.0 * PI * xi * x), false)
}

/// Squared L2 norm by quadrature.
pub fn norm_sq<F: Fn(f64) -> C64>(f: F, slow_decay: bool) -> f64 {
    integrate_line(|x| C64::new(f(x).norm_sqr(), 0.0), slow_decay).re
}

/// Inner product <f, g> = integral of f * conj(g) by quadrature.
pub fn inner<F: Fn(f64) -> C64, G: Fn(f64) -> C64>(f: F, g: G) -> C64 {
    integrate_line(|x| f(x) * g(x).conj(), false)
}

/// Chirp h_rate(x) = exp(-i pi rate x^2).
pub fn chirp(rate: f64, x: f64) -> C64 {
    C64::from_polar(1.0, -PI * rate * x * x)
}

/// Discretized oscillatory convolution (h_rate * f)(x) on [-8, 8] with a
/// uniform trapezoidal rule of `nodes` points.
pub fn chirp_convolution<F: Fn(f64) -> C64>(f: F, rate: f64, x: f64, nodes: usize) -> C64 {
    let (lo, hi) = (-8.0, 8.0);
    let h = (hi - lo) / (nodes - 1) as f64;
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..nodes {
        let y = lo + n as f64 * h;
        let w = if n == 0 || n == nodes - 1 { 0.5 } else { 1.0 };
        acc += chirp(rate, x - y) * f(y) * w;
    }
    acc * h
}

/// Largest deviation |f - g| on a uniform grid, relative to max |f|.
pub fn grid_relative_deviation<F: Fn(f64) -> C64, G: Fn(f64) -> C64>(
    f: F,
    g: G,
    lo: f64,
    hi: f64,
    nodes: usize,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for n in 0..nodes {
        let x = lo + (hi - lo) * n as f64 / (nodes - 1) as f64;
        let a = f(x);
        worst = worst.max((a - g(x)).norm());
        scale = scale.max(a.norm());
    }
    worst / scale.max(f64::MIN_POSITIVE)
}

/// Brute-force Zak transform of a sampled function.
pub fn zak_brute<F: Fn(f64) -> C64>(f: F, t: f64, omega: f64, terms: i64) -> C64 {
    (-terms..=terms)
        .map(|k| f(t - k as f64) * C64::from_polar(1.0, 2.0 * PI * k as f64 * omega))
        .sum()
}
