//! Frame bounds of Gabor systems `G(g, Q Z^2)`
//!
//! Lattice points are `p = Qz = (a, b)` acting as `M_a T_b`. A chirped Gaussian
//! window `c exp(-pi (u + r i) x^2 + l x)` is reduced to the standard Gaussian
//! by unitary conjugations: the chirp moves into the lattice as `U_r`, the
//! dilation as `diag(1/sqrt u, sqrt u)` and the shift only contributes a phase.
//! The estimator then works with `G(phi, Q~ Z^2)`.
//!
//! Estimates are Rayleigh-Ritz values of the truncated frame operator on the
//! span of the Hermite functions resolved by the grid. They describe the
//! discretized system, not certified L2 bounds.

use crate::error::{Error, Result};
use crate::lattice_factor::{factor_qr, Mat2, QrFactors};
use crate::window_algebra::GaussianAtom;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

pub const ESTIMATE_NOTE: &str =
    "finite-section estimate of the truncated, discretized system; not a certified frame bound";

/// Gabor system `G(window, Q Z^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeSystem {
    pub window: GaussianAtom,
    pub q: Mat2,
}

impl LatticeSystem {
    pub fn new(window: GaussianAtom, q: Mat2) -> Result<Self> {
        if !q.is_finite() || q.det() == 0.0 {
            return Err(Error::domain("lattice matrix must be finite with det Q != 0"));
        }
        Ok(LatticeSystem { window, q })
    }

    /// `G(phi_gamma, Q Z^2)`.
    pub fn dilated_gaussian(gamma: f64, q: Mat2) -> Result<Self> {
        Self::new(GaussianAtom::dilated_gaussian(gamma)?, q)
    }

    /// `G(g, alpha Z x beta Z)`: translations by `alpha`, modulations by `beta`.
    pub fn separable(window: GaussianAtom, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(window, Mat2::separable(alpha, beta))
    }

    pub fn abs_det(&self) -> f64 {
        self.q.det().abs()
    }

    /// Lattice for the standard Gaussian with the same frame bounds up to `scale`.
    fn normalized(&self) -> (Mat2, f64) {
        let w = self.window.quad();
        let (u, r) = (w.re, w.im);
        let s = u.sqrt();
        let q = Mat2::new(1.0 / s, 0.0, 0.0, s).mul(&Mat2::upper_shear(r)).mul(&self.q);
        let base = GaussianAtom::chirped_gaussian(r, u).expect("Re w > 0 for a valid atom");
        let kappa = self.window.l2_norm() / base.l2_norm();
        (q, kappa * kappa / s)
    }
}

/// Grid and lattice truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolution {
    /// Grid half-width.
    pub l: f64,
    /// Grid nodes.
    pub n: usize,
    /// Lattice truncation radius in normalized coordinates.
    pub m: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution { l: 6.0, n: 512, m: 12 }
    }
}

impl Resolution {
    fn validate(&self) -> Result<()> {
        if !(self.l >= 4.0) || self.n < 128 || self.m < 4 {
            return Err(Error::domain(format!(
                "resolution needs L >= 4, N >= 128, M >= 4; got L = {}, N = {}, M = {}",
                self.l, self.n, self.m
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinedEstimate {
    pub n: usize,
    pub a_est: f64,
    pub b_est: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEstimate {
    pub a_est: f64,
    pub b_est: f64,
    pub l: f64,
    /// Grid nodes actually used; raised above the request when the grid cannot
    /// resolve the highest modulation.
    pub n: usize,
    pub m: usize,
    pub certified: bool,
    pub refined: RefinedEstimate,
    pub atoms: usize,
    pub test_dimension: usize,
    pub note: &'static str,
}

impl BoundEstimate {
    pub fn ratio(&self) -> f64 {
        self.a_est / self.b_est
    }
}

/// Largest Hermite test space whose members are below `1e-13` at `x = +-L`.
pub fn test_dimension(l: f64) -> usize {
    let cap = 4096;
    let mut row = vec![0.0; cap];
    hermite_row(l, cap, &mut row);
    row.iter().position(|v| v.abs() >= 1e-13).unwrap_or(cap).max(1)
}

// Orthonormal Hermite functions psi_0..psi_{n-1} at x.
fn hermite_row(x: f64, n: usize, out: &mut [f64]) {
    let y = TAU.sqrt() * x;
    out[0] = 2f64.powf(0.25) * (-PI * x * x).exp();
    if n > 1 {
        out[1] = 2f64.sqrt() * y * out[0];
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        out[k + 1] = (2.0 / (kf + 1.0)).sqrt() * y * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
}

fn lattice_points(q: &Mat2, m: usize) -> Result<Vec<(f64, f64)>> {
    let inv = q.inverse()?;
    let m = m as f64;
    let reach = |r0: f64, r1: f64| ((r0.abs() + r1.abs()) * m).ceil() as i64;
    let (k_max, l_max) = (reach(inv.a, inv.b), reach(inv.c, inv.d));
    if k_max.saturating_mul(l_max) > 50_000_000 {
        return Err(Error::Degenerate("lattice too fine for the truncation radius".into()));
    }
    let mut pts = Vec::new();
    for k in -k_max..=k_max {
        for l in -l_max..=l_max {
            let p = q.apply([k as f64, l as f64]);
            if p[0].abs() <= m && p[1].abs() <= m {
                pts.push((p[0], p[1]));
            }
        }
    }
    Ok(pts)
}

struct Section {
    a: f64,
    b: f64,
    atoms: usize,
    nodes: usize,
}

// Extreme Rayleigh quotients of sum_p |<f, M_a T_b phi>|^2 over the Hermite span.
fn finite_section(points: &[(f64, f64)], l: f64, requested: usize, dim: usize) -> Result<Section> {
    let a_max = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let band = a_max + ((2 * dim + 1) as f64 / TAU).sqrt() + 6.0;
    let nodes = requested.max((2.0 * l * band).ceil() as usize + 1);
    let dx = 2.0 * l / (nodes - 1) as f64;
    let xs: Vec<f64> = (0..nodes).map(|i| -l + i as f64 * dx).collect();
    let weight = |i: usize| if i == 0 || i + 1 == nodes { 0.5 * dx } else { dx };

    let mut psi = DMatrix::<C64>::zeros(nodes, dim);
    let mut row = vec![0.0; dim];
    for (i, &x) in xs.iter().enumerate() {
        hermite_row(x, dim, &mut row);
        for k in 0..dim {
            psi[(i, k)] = C64::new(row[k] * weight(i), 0.0);
        }
    }

    let sampled: Vec<(Vec<C64>, f64)> = points
        .par_iter()
        .map(|&(a, b)| {
            let mut norm = 0.0;
            let vals = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let v = C64::from_polar((-PI * (x - b) * (x - b)).exp(), -TAU * a * x);
                    norm += weight(i) * v.norm_sqr();
                    v
                })
                .collect();
            (vals, norm)
        })
        .collect();
    let kept: Vec<&Vec<C64>> = sampled.iter().filter(|(_, n)| *n > 1e-14).map(|(v, _)| v).collect();
    if kept.len() < 3 {
        return Err(Error::Degenerate(format!(
            "only {} lattice atoms meet the grid support",
            kept.len()
        )));
    }
    let x = DMatrix::from_fn(kept.len(), nodes, |r, c| kept[r][c]);
    let d = x * psi;
    let gram = d.adjoint() * &d;
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let a = eig.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    let b = eig.iter().cloned().fold(0.0, f64::max);
    Ok(Section { a, b, atoms: kept.len(), nodes })
}

/// Finite-section bounds at `N` and `2N` grid nodes.
pub fn estimate_bounds(system: &LatticeSystem, res: Resolution) -> Result<BoundEstimate> {
    res.validate()?;
    let (q, scale) = system.normalized();
    let points = lattice_points(&q, res.m)?;
    let dim = test_dimension(res.l);
    let coarse = finite_section(&points, res.l, res.n, dim)?;
    let fine = finite_section(&points, res.l, 2 * res.n, dim)?;
    Ok(BoundEstimate {
        a_est: scale * coarse.a,
        b_est: scale * coarse.b,
        l: res.l,
        n: coarse.nodes,
        m: res.m,
        certified: false,
        refined: RefinedEstimate { n: fine.nodes, a_est: scale * fine.a, b_est: scale * fine.b },
        atoms: coarse.atoms,
        test_dimension: dim,
        note: ESTIMATE_NOTE,
    })
}

/// Separable chirped system equivalent to `G(phi_gamma, Q Z^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Canonical {
    /// `h_lambda phi`.
    pub window: GaussianAtom,
    pub alpha: f64,
    pub beta: f64,
    /// Frame bounds of the original system are `scale` times those of the canonical one.
    pub scale: f64,
    pub factors: QrFactors,
    /// A column was negated to make the determinant positive.
    pub flipped: bool,
}

impl Canonical {
    pub fn system(&self) -> LatticeSystem {
        LatticeSystem { window: self.window, q: Mat2::separable(self.alpha, self.beta) }
    }
}

pub fn canonicalize(gamma: f64, q: &Mat2) -> Result<Canonical> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("gamma must be positive, got {gamma}")));
    }
    let det = q.det();
    if det == 0.0 || !q.is_finite() {
        return Err(Error::domain("canonicalize needs a finite Q with det Q != 0"));
    }
    // Q diag(1, -1) spans the same lattice.
    let flipped = det < 0.0;
    let q = if flipped { Mat2::new(q.a, -q.b, q.c, -q.d) } else { *q };
    let q = Mat2::new(1.0 / gamma, 0.0, 0.0, gamma).mul(&q);
    let factors = factor_qr(&q)?;
    Ok(Canonical {
        window: GaussianAtom::chirped_gaussian(factors.lambda, 1.0)?,
        alpha: factors.alpha,
        beta: factors.beta,
        scale: 1.0 / gamma,
        factors,
        flipped,
    })
}

/// Outcome of the dual-lattice dominance test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Certification {
    Certified { a_lower: f64, b_upper: f64, terms: usize, tail: f64 },
    Inconclusive { margin: f64, terms: usize, tail: f64 },
}

impl Certification {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certification::Certified { .. })
    }
}

// sum_{|k| > K} exp(-c k^2)
fn gaussian_tail(c: f64, k: usize) -> f64 {
    let k1 = k as f64 + 1.0;
    2.0 * (-c * k1 * k1).exp() / (1.0 - (-2.0 * c * k1).exp())
}

fn gaussian_partial(c: f64, k: usize) -> f64 {
    1.0 + 2.0 * (1..=k).map(|j| (-c * (j * j) as f64).exp()).sum::<f64>()
}

// |<g, M_a T_b g>| in log form; far shifts underflow the shifted atom's amplitude
// while the Gaussian integral overflows.
fn ambiguity_modulus(g: &GaussianAtom, a: f64, b: f64) -> f64 {
    let (c, w, lin) = (g.amplitude(), g.quad(), g.lin());
    let big_a = 2.0 * w.re;
    let big_b = lin + lin.conj() + 2.0 * PI * w.conj() * b - 2.0 * PI * C64::i() * a;
    let big_c = -PI * w.conj() * b * b - lin.conj() * b;
    let log = c.norm_sqr().ln() + (big_c + big_b * big_b / (4.0 * PI * big_a)).re - 0.5 * big_a.ln();
    log.exp()
}

/// Janssen bounds for `G(g, alpha Z x beta Z)` from `c_{k,l} = <g, M_{l/alpha} T_{k/beta} g>`.
pub fn janssen_certify(window: &GaussianAtom, alpha: f64, beta: f64, terms: usize) -> Result<Certification> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::domain("janssen_certify needs alpha, beta > 0"));
    }
    if terms < 8 {
        return Err(Error::domain(format!("janssen_certify needs K >= 8, got {terms}")));
    }
    let k_max = terms as i64;
    let c00 = window.inner_product(window).re;
    let mut off = 0.0;
    for k in -k_max..=k_max {
        for l in -k_max..=k_max {
            if k == 0 && l == 0 {
                continue;
            }
            off += ambiguity_modulus(window, l as f64 / alpha, k as f64 / beta);
        }
    }
    // |c(tau, xi)| = c00 exp(-(pi/2) [u tau^2 + (r tau + xi)^2 / u]) >= c00 exp(-(pi/2) mu (tau^2 + xi^2)).
    let w = window.quad();
    let (u, r) = (w.re, w.im);
    let (p, s, d) = (u + r * r / u, r / u, 1.0 / u);
    let mu = 0.5 * (p + d) - (0.25 * (p - d) * (p - d) + s * s).sqrt();
    let ct = 0.5 * PI * mu / (beta * beta);
    let cx = 0.5 * PI * mu / (alpha * alpha);
    let (tt, tx) = (gaussian_tail(ct, terms), gaussian_tail(cx, terms));
    let (pt, px) = (gaussian_partial(ct, terms), gaussian_partial(cx, terms));
    let tail = c00 * (tt * px + pt * tx + tt * tx);
    let density = alpha * beta;
    let margin = c00 - off - tail;
    Ok(if margin > 0.0 {
        Certification::Certified { a_lower: margin / density, b_upper: (c00 + off + tail) / density, terms, tail }
    } else {
        Certification::Inconclusive { margin, terms, tail }
    })
}

pub const EQUIVALENCE_TOL: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub direct: BoundEstimate,
    pub canonical: BoundEstimate,
    pub canonical_form: Canonical,
    /// `(A/B)_direct / (A/B)_canonical`.
    pub ratio: f64,
    pub passed: bool,
}

/// Estimates `G(phi_gamma, Q Z^2)` and its canonical separable form.
pub fn equivalence_check(gamma: f64, q: &Mat2, res: Resolution) -> Result<EquivalenceReport> {
    let det = q.det().abs();
    if !(det > 0.0 && det < 1.0) {
        return Err(Error::domain(format!("equivalence_check needs 0 < |det Q| < 1, got {det}")));
    }
    let direct = estimate_bounds(&LatticeSystem::dilated_gaussian(gamma, *q)?, res)?;
    let canonical_form = canonicalize(gamma, q)?;
    let mut canonical = estimate_bounds(&canonical_form.system(), res)?;
    canonical.a_est *= canonical_form.scale;
    canonical.b_est *= canonical_form.scale;
    canonical.refined.a_est *= canonical_form.scale;
    canonical.refined.b_est *= canonical_form.scale;
    let ratio = direct.ratio() / canonical.ratio();
    Ok(EquivalenceReport { direct, canonical, canonical_form, ratio, passed: (ratio - 1.0).abs() <= EQUIVALENCE_TOL })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepStatus {
    Certified,
    Uncertified,
    DensityViolating,
}

impl SweepStatus {
    pub fn label(&self) -> &'static str {
        match self {
            SweepStatus::Certified => "true",
            SweepStatus::Uncertified => "false",
            SweepStatus::DensityViolating => "density-violating",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub det: f64,
    pub estimate: Option<BoundEstimate>,
    pub status: SweepStatus,
}

impl SweepRow {
    pub fn ratio(&self) -> Option<f64> {
        self.estimate.as_ref().map(BoundEstimate::ratio)
    }
}

pub const SWEEP_JANSSEN_TERMS: usize = 12;

/// Rows for `G(phi_gamma, sqrt|s| shape Z^2)` over `s` in `dets`; negative `s`
/// negates the first column. `|s| > 1` is reported without estimation.
pub fn sweep_det(gamma: f64, shape: &Mat2, dets: &[f64], res: Resolution) -> Result<Vec<SweepRow>> {
    if ((shape.det() - 1.0).abs()) > 1e-9 {
        return Err(Error::domain(format!("sweep shape must have det 1, got {}", shape.det())));
    }
    if let Some(s) = dets.iter().find(|s| **s == 0.0 || !s.is_finite()) {
        return Err(Error::domain(format!("sweep determinants must be finite and nonzero, got {s}")));
    }
    res.validate()?;
    dets.par_iter()
        .map(|&s| {
            if s.abs() > 1.0 {
                return Ok(SweepRow { det: s, estimate: None, status: SweepStatus::DensityViolating });
            }
            let c = s.abs().sqrt();
            let sign = s.signum();
            let q = Mat2::new(sign * c * shape.a, c * shape.b, sign * c * shape.c, c * shape.d);
            let mut estimate = estimate_bounds(&LatticeSystem::dilated_gaussian(gamma, q)?, res)?;
            let canon = canonicalize(gamma, &q)?;
            let cert = janssen_certify(&canon.window, canon.alpha, canon.beta, SWEEP_JANSSEN_TERMS)?;
            estimate.certified = cert.is_certified();
            let status = if estimate.certified { SweepStatus::Certified } else { SweepStatus::Uncertified };
            Ok(SweepRow { det: s, estimate: Some(estimate), status })
        })
        .collect()
}
