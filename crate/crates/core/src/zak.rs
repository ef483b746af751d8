//! Zak transform, Jacobi theta and zero certification
//!
//! `Zf(t, w) = sum_k f(t - k) exp(2 pi i k w)`. For `f = h_lambda phi_gamma` the
//! transform reduces to `exp(-pi (gamma^2 + lambda i) t^2) Theta(z, q)` with
//! `q = exp(-pi (gamma^2 + lambda i))` and `z = exp(2 pi (gamma^2 t + (w + lambda t) i))`.

use crate::error::{Error, Result};
use crate::window_algebra::GaussianAtom;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use ThetaMode as Mode;

/// Two successive truncations must agree to this before a value is returned.
pub const AGREEMENT_TOL: f64 = 1e-13;
const MAX_TERMS: usize = 1 << 14;

/// Truncated sum together with a bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZakValue {
    pub value: C64,
    pub tail_bound: f64,
}

/// `Zg(t, w)` summed over `|k| <= terms`.
pub fn zak_direct(g: &GaussianAtom, t: f64, omega: f64, terms: usize) -> Result<ZakValue> {
    if terms == 0 {
        return Err(Error::domain("zak_direct needs at least one term"));
    }
    let k_max = terms as i64;
    let value = (-k_max..=k_max)
        .map(|k| g.evaluate(t - k as f64) * C64::from_polar(1.0, TAU * k as f64 * omega))
        .sum();
    Ok(ZakValue { value, tail_bound: atom_tail_bound(g, t, terms) })
}

// |g(x)| = |c| exp(-pi u (x - x_c)^2 + e); every discarded shift lies at least
// `d` from the peak and the squares grow at least linearly past it.
fn atom_tail_bound(g: &GaussianAtom, t: f64, terms: usize) -> f64 {
    let u = g.quad().re;
    let l = g.lin().re;
    let x_c = l / (TAU * u);
    let e = l * l / (4.0 * PI * u);
    let d = terms as f64 + 1.0 - (t - x_c).abs();
    if d <= 0.0 {
        return f64::INFINITY;
    }
    let ratio = (-TAU * u * d).exp();
    2.0 * g.amplitude().norm() * (e - PI * u * d * d).exp() / (1.0 - ratio)
}

/// `Zf(t, w)` of an arbitrary decaying function, summed over `|k| <= terms`.
pub fn zak_sum<F: Fn(f64) -> C64 + ?Sized>(f: &F, t: f64, omega: f64, terms: usize) -> C64 {
    let k_max = terms as i64;
    (-k_max..=k_max)
        .map(|k| f(t - k as f64) * C64::from_polar(1.0, TAU * k as f64 * omega))
        .sum()
}

/// Arguments of `Theta(z, q) = sum_k q^{k^2} z^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaParams {
    z: C64,
    q: C64,
}

impl ThetaParams {
    pub fn new(z: C64, q: C64) -> Result<Self> {
        if !(q.norm() < 1.0) {
            return Err(Error::domain(format!("theta needs |q| < 1, got |q| = {}", q.norm())));
        }
        if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::domain("theta needs a finite nonzero z"));
        }
        Ok(ThetaParams { z, q })
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn q(&self) -> C64 {
        self.q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaMode {
    Series,
    Product,
}

/// Truncated theta value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaValue {
    pub value: C64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// Theta by the series over `|k| <= terms` or the triple product with `terms` factors.
pub fn theta_eval(p: &ThetaParams, terms: usize, mode: ThetaMode) -> Result<ThetaValue> {
    if terms == 0 {
        return Err(Error::domain("theta needs at least one term"));
    }
    if p.q == C64::new(0.0, 0.0) {
        return Ok(ThetaValue { value: C64::new(1.0, 0.0), tail_bound: 0.0, terms });
    }
    let value = match mode {
        Mode::Series => series(p.q.ln(), p.z.ln(), C64::new(0.0, 0.0), terms),
        Mode::Product => product(p, terms),
    };
    let tail_bound = match mode {
        Mode::Series => series_tail(p, terms),
        Mode::Product => product_tail(p, terms, value.norm()),
    };
    Ok(ThetaValue { value, tail_bound, terms })
}

/// Theta with the truncation doubled from `start` until successive values agree.
pub fn theta_adaptive(p: &ThetaParams, start: usize, mode: ThetaMode) -> Result<ThetaValue> {
    let mut k = start.max(1);
    let mut prev = theta_eval(p, k, mode)?;
    loop {
        let next = theta_eval(p, 2 * k, mode)?;
        let scale = next.value.norm().max(1.0);
        if (next.value - prev.value).norm() <= AGREEMENT_TOL * scale || 2 * k >= MAX_TERMS {
            return Ok(next);
        }
        k *= 2;
        prev = next;
    }
}

// sum_{|k|<=K} exp(offset + k^2 ln q + k ln z)
fn series(ln_q: C64, ln_z: C64, offset: C64, terms: usize) -> C64 {
    let k_max = terms as i64;
    (-k_max..=k_max)
        .map(|k| {
            let k = k as f64;
            (offset + ln_q * (k * k) + ln_z * k).exp()
        })
        .sum()
}

fn series_tail(p: &ThetaParams, terms: usize) -> f64 {
    let rho = p.q.norm();
    let s = p.z.norm().max(1.0 / p.z.norm());
    let k = terms as f64 + 1.0;
    let ratio = rho.powf(2.0 * k + 1.0) * s;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    2.0 * rho.powf(k * k) * s.powf(k) / (1.0 - ratio)
}

fn product(p: &ThetaParams, terms: usize) -> C64 {
    let one = C64::new(1.0, 0.0);
    let q2 = p.q * p.q;
    let z_inv = one / p.z;
    let mut acc = one;
    let mut even = one;
    let mut odd = p.q;
    for _ in 0..terms {
        even *= q2;
        acc *= (one - even) * (one + odd * p.z) * (one + odd * z_inv);
        odd *= q2;
    }
    acc
}

// Each discarded factor is 1 + a_j with sum |a_j| <= eps; the remaining product
// lies within exp(eps / (1 - max |a_j|)) - 1 of one.
fn product_tail(p: &ThetaParams, terms: usize, partial: f64) -> f64 {
    let rho = p.q.norm();
    let s = p.z.norm() + 1.0 / p.z.norm();
    let k = terms as f64;
    let first = rho.powf(2.0 * k + 2.0) + rho.powf(2.0 * k + 1.0) * s;
    if first >= 0.5 || rho >= 1.0 {
        return f64::INFINITY;
    }
    let eps = first / (1.0 - rho * rho);
    partial * ((2.0 * eps).exp() - 1.0)
}

/// `Z(h_lambda phi_gamma)(t, w)` through the theta reduction.
pub fn zak_theta(lambda: f64, gamma: f64, t: f64, omega: f64) -> Result<C64> {
    if !(gamma > 0.0 && gamma.is_finite()) || !lambda.is_finite() {
        return Err(Error::domain(format!("zak_theta needs gamma > 0, got {gamma}")));
    }
    let w = C64::new(gamma * gamma, lambda);
    let ln_q = -PI * w;
    let ln_z = TAU * C64::new(gamma * gamma * t, omega + lambda * t);
    let offset = -PI * w * t * t;
    let mut k = start_terms(gamma);
    let mut prev = series(ln_q, ln_z, offset, k);
    loop {
        let next = series(ln_q, ln_z, offset, 2 * k);
        if (next - prev).norm() <= AGREEMENT_TOL * next.norm().max(1.0) || 2 * k >= MAX_TERMS {
            return Ok(next);
        }
        k *= 2;
        prev = next;
    }
}

/// Initial truncation for the theta route; grows like `30 / gamma^2`.
pub fn start_terms(gamma: f64) -> usize {
    ((30.0 / (gamma * gamma)).ceil() as usize).clamp(30, MAX_TERMS / 2)
}

/// `|Z|` on the N x N grid `(i/N, j/N)`, row-major with `t` fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZakGrid {
    pub n: usize,
    pub values: Vec<f64>,
}

impl ZakGrid {
    pub fn get(&self, i_t: usize, j_omega: usize) -> f64 {
        self.values[j_omega * self.n + i_t]
    }

    /// Grid index `(i_t, j_omega)` of the smallest value.
    pub fn argmin(&self) -> (usize, usize) {
        let (idx, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
        (idx % self.n, idx / self.n)
    }
}

pub fn zak_grid(lambda: f64, gamma: f64, n: usize) -> Result<ZakGrid> {
    if n == 0 {
        return Err(Error::domain("grid size must be positive"));
    }
    zak_theta(lambda, gamma, 0.0, 0.0)?;
    let h = 1.0 / n as f64;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|i| zak_theta(lambda, gamma, i as f64 * h, j as f64 * h).map_or(f64::NAN, |z| z.norm()))
                .collect()
        })
        .collect();
    Ok(ZakGrid { n, values: rows.concat() })
}

/// A located zero of `Z(h_lambda phi_gamma)` with its certification data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroCertificate {
    pub t: f64,
    pub omega: f64,
    pub winding: i64,
    pub simplicity_constant: f64,
    pub search_resolution: usize,
    /// `|Z|` at the refined point.
    pub residual: f64,
    pub local_minima: usize,
}

impl ZeroCertificate {
    pub fn is_simple(&self) -> bool {
        self.winding == 1 && self.simplicity_constant > 0.0
    }
}

pub const CONTOUR_HALF_WIDTH: f64 = 0.05;
pub const CONTOUR_SAMPLES: usize = 512;
const RING_COUNT: usize = 8;
const RING_ANGLES: usize = 64;
const RING_RADII: (f64, f64) = (1e-3, 5e-2);

/// Locates the zeros of `Z(h_lambda phi_gamma)` on the unit square and certifies
/// that there is exactly one, with its winding number and simplicity constant.
pub fn find_zero(lambda: f64, gamma: f64, n: usize) -> Result<ZeroCertificate> {
    if n < 64 {
        return Err(Error::domain(format!("find_zero needs a grid of at least 64, got {n}")));
    }
    let grid = zak_grid(lambda, gamma, n)?;
    let scale = grid.values.iter().cloned().fold(0.0, f64::max);
    let eval = |t: f64, w: f64| zak_theta(lambda, gamma, t, w).unwrap_or(C64::new(f64::NAN, f64::NAN));

    let minima = local_minima(&grid);
    let mut zeros: Vec<(f64, f64, f64)> = Vec::new();
    for &(i, j) in &minima {
        let h = 1.0 / n as f64;
        if let Some((t, w)) = newton(&eval, i as f64 * h, j as f64 * h, h, scale) {
            let (t, w) = (wrap(t), wrap(w));
            let residual = eval(t, w).norm();
            let duplicate = zeros.iter().any(|&(t0, w0, _)| torus_dist(t, w, t0, w0) < 1e-6);
            if !duplicate {
                zeros.push((t, w, residual));
            }
        }
    }
    let (t, omega, residual) = match zeros.len() {
        0 => {
            return Err(Error::NoZero(format!(
                "{} local minima of |Z| on the {n}x{n} grid, none refined to a zero",
                minima.len()
            )))
        }
        1 => zeros[0],
        count => return Err(Error::MultipleZero { count }),
    };
    let winding = winding_number(&eval, t, omega, CONTOUR_HALF_WIDTH, CONTOUR_SAMPLES, scale)?;
    let simplicity_constant = simplicity(&eval, t, omega);
    Ok(ZeroCertificate {
        t,
        omega,
        winding,
        simplicity_constant,
        search_resolution: n,
        residual,
        local_minima: minima.len(),
    })
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn torus_dist(t0: f64, w0: f64, t1: f64, w1: f64) -> f64 {
    let d = |a: f64, b: f64| {
        let x = (a - b).rem_euclid(1.0);
        x.min(1.0 - x)
    };
    d(t0, t1).hypot(d(w0, w1))
}

// |Z| is 1-periodic in both variables, so neighbours wrap around.
fn local_minima(grid: &ZakGrid) -> Vec<(usize, usize)> {
    let n = grid.n as i64;
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let v = grid.get(i as usize, j as usize);
            let mut is_min = v.is_finite();
            'nb: for dj in -1..=1 {
                for di in -1..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = (i + di).rem_euclid(n) as usize;
                    let nj = (j + dj).rem_euclid(n) as usize;
                    let u = grid.get(ni, nj);
                    // Ties go to the first index in scan order.
                    let earlier = (nj as i64, ni as i64) < (j, i);
                    if u < v || (u == v && earlier) {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                out.push((i as usize, j as usize));
            }
        }
    }
    out
}

// Newton on (Re Z, Im Z) with a central-difference Jacobian.
fn newton<F: Fn(f64, f64) -> C64>(f: &F, t0: f64, w0: f64, cell: f64, scale: f64) -> Option<(f64, f64)> {
    let (mut t, mut w) = (t0, w0);
    let mut val = f(t, w);
    let fd = 1e-6;
    for _ in 0..60 {
        if val.norm() <= 1e-15 * scale {
            break;
        }
        let dt = (f(t + fd, w) - f(t - fd, w)) / (2.0 * fd);
        let dw = (f(t, w + fd) - f(t, w - fd)) / (2.0 * fd);
        let det = dt.re * dw.im - dw.re * dt.im;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let mut st = -(dw.im * val.re - dw.re * val.im) / det;
        let mut sw = -(-dt.im * val.re + dt.re * val.im) / det;
        let len = st.hypot(sw);
        if len > 4.0 * cell {
            st *= 4.0 * cell / len;
            sw *= 4.0 * cell / len;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let cand = f(t + st, w + sw);
            if cand.norm() < val.norm() {
                t += st;
                w += sw;
                val = cand;
                accepted = true;
                break;
            }
            st *= 0.5;
            sw *= 0.5;
        }
        if !accepted || st.hypot(sw) < 1e-15 {
            break;
        }
    }
    let drift = torus_dist(t, w, t0, w0);
    (val.norm() <= 1e-10 * scale.max(1.0) && drift <= 4.0 * cell).then_some((t, w))
}

/// Winding number of `f` around the counter-clockwise square of half-width `half`.
pub fn winding_number<F: Fn(f64, f64) -> C64>(
    f: &F,
    t0: f64,
    w0: f64,
    half: f64,
    samples: usize,
    scale: f64,
) -> Result<i64> {
    let corners = [(half, -half), (half, half), (-half, half), (-half, -half), (half, -half)];
    let per_side = samples.max(4) / 4;
    let point = |s: f64| {
        let side = ((s * 4.0).floor() as usize).min(3);
        let u = s * 4.0 - side as f64;
        let (a, b) = (corners[side], corners[side + 1]);
        (t0 + a.0 + u * (b.0 - a.0), w0 + a.1 + u * (b.1 - a.1))
    };
    let floor = 1e-12 * scale.max(1.0);
    let value = |s: f64| -> Result<C64> {
        let (t, w) = point(s);
        let v = f(t, w);
        if !(v.norm() > floor) {
            return Err(Error::Contour(format!("|Z| = {:.3e} on the contour at ({t:.6}, {w:.6})", v.norm())));
        }
        Ok(v)
    };
    let total_samples = 4 * per_side;
    let mut total = 0.0;
    let mut prev = value(0.0)?;
    for k in 1..=total_samples {
        let s0 = (k - 1) as f64 / total_samples as f64;
        let s1 = k as f64 / total_samples as f64;
        let next = value(s1)?;
        total += arg_increment(&value, s0, s1, prev, next, 0)?;
        prev = next;
    }
    Ok((total / TAU).round() as i64)
}

fn arg_increment<V: Fn(f64) -> Result<C64>>(value: &V, s0: f64, s1: f64, a: C64, b: C64, depth: u32) -> Result<f64> {
    let d = (b / a).arg();
    if d.abs() < PI / 2.0 {
        return Ok(d);
    }
    if depth >= 30 {
        return Err(Error::Contour("argument could not be tracked along the contour".into()));
    }
    let mid = 0.5 * (s0 + s1);
    let m = value(mid)?;
    Ok(arg_increment(value, s0, mid, a, m, depth + 1)? + arg_increment(value, mid, s1, m, b, depth + 1)?)
}

/// Minimum of `|f| / r` over sampled rings around `(t0, w0)`.
pub fn simplicity<F: Fn(f64, f64) -> C64>(f: &F, t0: f64, w0: f64) -> f64 {
    let (r_lo, r_hi) = RING_RADII;
    let mut best = f64::INFINITY;
    for ring in 0..RING_COUNT {
        let r = r_lo * (r_hi / r_lo).powf(ring as f64 / (RING_COUNT - 1) as f64);
        for a in 0..RING_ANGLES {
            let phi = TAU * a as f64 / RING_ANGLES as f64;
            let v = f(t0 + r * phi.cos(), w0 + r * phi.sin()).norm() / r;
            best = best.min(v);
        }
    }
    best
}

/// Declared symmetry class of a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryKind {
    Real,
    Even,
    Odd,
    /// `f_hat = eigenvalue * f`.
    Eigenfunction { eigenvalue: C64 },
}

/// Window passed to the symmetry suite.
pub enum Window<'a> {
    Atom(GaussianAtom),
    Callable(&'a (dyn Fn(f64) -> C64 + Sync)),
}

impl Window<'_> {
    fn zak(&self, t: f64, omega: f64) -> C64 {
        match self {
            Window::Atom(g) => zak_direct(g, t, omega, SUITE_TERMS).map(|z| z.value).unwrap_or_default(),
            Window::Callable(f) => zak_sum(*f, t, omega, SUITE_TERMS),
        }
    }
}

const SUITE_TERMS: usize = 30;
pub const SUITE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryCheck {
    pub name: String,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub kind: SymmetryKind,
    pub checks: Vec<SymmetryCheck>,
}

impl SymmetryReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

fn sample_points() -> Vec<(f64, f64)> {
    let coords = [0.07, 0.23, 0.41, 0.66, 0.88];
    coords.iter().flat_map(|&t| coords.iter().map(move |&w| (t, w))).collect()
}

/// Checks the Zak identities implied by the declared symmetry of `window`.
/// Residuals are relative to `max(1, max |Zf|)` over the sample points.
pub fn symmetry_suite(window: &Window<'_>, kind: SymmetryKind) -> SymmetryReport {
    let pts = sample_points();
    let scale = pts.iter().map(|&(t, w)| window.zak(t, w).norm()).fold(1.0, f64::max);
    let check = |name: &str, residual: f64| SymmetryCheck {
        name: name.to_string(),
        residual: residual / scale,
        passed: residual / scale <= SUITE_TOL,
    };
    let max_over = |f: &dyn Fn(f64, f64) -> f64| pts.iter().map(|&(t, w)| f(t, w)).fold(0.0, f64::max);
    let z = |t, w| window.zak(t, w);
    let mut checks = Vec::new();
    match kind {
        SymmetryKind::Real => {
            checks.push(check("conj Zf(t,w) = Zf(t,1-w)", max_over(&|t, w| (z(t, w).conj() - z(t, 1.0 - w)).norm())));
        }
        SymmetryKind::Even => {
            checks.push(check("Zf(-t,-w) = Zf(t,w)", max_over(&|t, w| (z(-t, -w) - z(t, w)).norm())));
            checks.push(check("Zf(1/2,1/2) = 0", z(0.5, 0.5).norm()));
        }
        SymmetryKind::Odd => {
            checks.push(check("Zf(-t,-w) = -Zf(t,w)", max_over(&|t, w| (z(-t, -w) + z(t, w)).norm())));
            checks.push(check("Zf(0,0) = 0", z(0.0, 0.0).norm()));
            checks.push(check("Zf(1/2,0) = 0", z(0.5, 0.0).norm()));
            checks.push(check("Zf(0,1/2) = 0", z(0.0, 0.5).norm()));
        }
        SymmetryKind::Eigenfunction { eigenvalue } => {
            // Zf(t,w) = e^{2 pi i t w} Z(f_hat)(w,-t) with f_hat = mu f.
            let rotation = max_over(&|t, w| {
                (z(t, w) - C64::from_polar(1.0, TAU * t * w) * eigenvalue * z(w, -t)).norm()
            });
            checks.push(check("Zf(t,w) = e^(2 pi i t w) Zf_hat(w,-t)", rotation));
            if (eigenvalue - C64::new(0.0, -1.0)).norm() > 1e-12 {
                checks.push(check("Zf(1/2,1/2) = 0", z(0.5, 0.5).norm()));
            }
        }
    }
    SymmetryReport { kind, checks }
}
