//! 2x2 lattice generators and the factorizations that move a general lattice
//! `Q Z^2` into separable form: QR with column scaling
//! (`Q = R_theta U_lambda D_{alpha,beta}`), the shear product
//! `L_{lambda'} U_lambda = diag(d1, d2) R_theta`, and the chirp-design maps
//! linking the shear parameter to a chirped Gaussian `h_r phi_{sqrt u}`.

use crate::error::{Error, Result};
use crate::window_algebra::{product_convolution, GaussianAtom};
use num_complex::Complex64 as C64;
use serde::Serialize;

/// Real 2x2 matrix `(a b; c d)`. Columns generate the lattice; a lattice
/// point `Q z` is read as `(modulation, translation)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    /// From four row-major entries.
    pub fn from_row_major(e: [f64; 4]) -> Self {
        Mat2::new(e[0], e[1], e[2], e[3])
    }

    pub fn to_row_major(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_finite(&self) -> bool {
        self.to_row_major().iter().all(|v| v.is_finite())
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn apply(&self, z: [f64; 2]) -> [f64; 2] {
        [self.a * z[0] + self.b * z[1], self.c * z[0] + self.d * z[1]]
    }

    pub fn scaled(&self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn neg(&self) -> Mat2 {
        self.scaled(-1.0)
    }

    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::domain("matrix is singular"));
        }
        Ok(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        self.to_row_major()
            .iter()
            .zip(o.to_row_major())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// `R_theta = (cos sin; -sin cos)`.
    pub fn rotation(theta: f64) -> Mat2 {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, s, -s, c)
    }

    /// `U_lambda = (1 lambda; 0 1)`.
    pub fn upper_shear(lambda: f64) -> Mat2 {
        Mat2::new(1.0, lambda, 0.0, 1.0)
    }

    /// `L_{lambda'} = (1 0; 1/lambda' 1)`.
    pub fn lower_shear(lambda_prime: f64) -> Result<Mat2> {
        if lambda_prime == 0.0 || !lambda_prime.is_finite() {
            return Err(Error::domain("lower shear requires lambda' != 0"));
        }
        Ok(Mat2::new(1.0, 0.0, 1.0 / lambda_prime, 1.0))
    }

    /// `D_gamma = diag(1/gamma, gamma)`.
    pub fn dilation(gamma: f64) -> Result<Mat2> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain(format!("dilation requires gamma > 0, got {gamma}")));
        }
        Ok(Mat2::new(1.0 / gamma, 0.0, 0.0, gamma))
    }

    /// `D_{alpha,beta} = diag(beta, alpha)`: modulation step beta,
    /// translation step alpha.
    pub fn separable(alpha: f64, beta: f64) -> Mat2 {
        Mat2::new(beta, 0.0, 0.0, alpha)
    }
}

/// `Q = R_theta U_lambda D_{alpha,beta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QrFactors {
    pub theta: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl QrFactors {
    pub fn reconstruct(&self) -> Mat2 {
        Mat2::rotation(self.theta)
            .mul(&Mat2::upper_shear(self.lambda))
            .mul(&Mat2::separable(self.alpha, self.beta))
    }
}

/// QR decomposition followed by a column scaling. Requires `det Q > 0`;
/// callers holding a negative determinant negate `Q` first.
pub fn factor_qr(q: &Mat2) -> Result<QrFactors> {
    if !q.is_finite() {
        return Err(Error::domain("matrix entries must be finite"));
    }
    let det = q.det();
    if !(det > 0.0) {
        return Err(Error::domain(format!("factor_qr requires det Q > 0, got {det}")));
    }
    let norm = q.a.hypot(q.c);
    // Left factor (a -c; c a)/norm equals R_theta with cos = a/norm, sin = -c/norm.
    Ok(QrFactors {
        theta: (-q.c).atan2(q.a),
        lambda: (q.a * q.b + q.c * q.d) / det,
        alpha: det / norm,
        beta: norm,
    })
}

/// `L_{lambda'} U_lambda = diag(d1, d2) R_theta` under `lambda' = -(lambda + 1/lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LuRotation {
    pub lambda: f64,
    pub lambda_prime: f64,
    pub d1: f64,
    pub d2: f64,
    pub theta: f64,
    pub product: Mat2,
    /// Inner product of the two rows of the shear product.
    pub row_dot: f64,
    pub reconstruction_error: f64,
}

pub fn factor_lu_rotation(lambda: f64) -> Result<LuRotation> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::domain("factor_lu_rotation requires lambda != 0"));
    }
    let lambda_prime = -(lambda + 1.0 / lambda);
    let product = Mat2::lower_shear(lambda_prime)?.mul(&Mat2::upper_shear(lambda));
    let d1 = product.a.hypot(product.b);
    let d2 = product.c.hypot(product.d);
    let theta = (product.b / d1).atan2(product.a / d1);
    let rebuilt = Mat2::new(d1, 0.0, 0.0, d2).mul(&Mat2::rotation(theta));
    Ok(LuRotation {
        lambda,
        lambda_prime,
        d1,
        d2,
        theta,
        product,
        row_dot: product.a * product.c + product.b * product.d,
        reconstruction_error: rebuilt.max_abs_diff(&product),
    })
}

/// Parameters tying the shear condition to the product-convolved Gaussian
/// `h_lambda (h_lambda' conv phi_{1/gamma}) = s h_r phi_{sqrt u}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChirpDesign {
    pub lambda: f64,
    pub lambda_prime: f64,
    pub gamma: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub s: C64,
}

impl ChirpDesign {
    /// The designed window `s h_r phi_{sqrt u}` as an atom.
    pub fn atom(&self) -> GaussianAtom {
        GaussianAtom::chirped_gaussian(self.r, self.u)
            .expect("u > 0 by construction")
            .scale(self.s)
    }
}

pub fn chirp_design(lambda: f64) -> Result<ChirpDesign> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::domain("chirp_design requires lambda != 0"));
    }
    let lambda_prime = -(lambda + 1.0 / lambda);
    let gamma = (lambda * lambda + 1.0).sqrt();
    let pc = product_convolution(lambda, lambda_prime, gamma)?;
    Ok(ChirpDesign {
        lambda,
        lambda_prime,
        gamma,
        u: pc.u,
        v: pc.v,
        r: pc.v + lambda,
        s: pc.s,
    })
}

/// `G(lambda) = r/u` in expanded form:
/// `lambda/(lambda^2+1) * (lambda^4 + 2 lambda^2 + lambda^2/(lambda^2+1)^2 + lambda^2/(lambda^2+1))`.
pub fn ratio_g(lambda: f64) -> Result<f64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::domain("ratio_g requires lambda != 0"));
    }
    let l2 = lambda * lambda;
    let p = l2 + 1.0;
    Ok(lambda / p * (l2 * l2 + 2.0 * l2 + l2 / (p * p) + l2 / p))
}

const SCAN_MIN: f64 = 1e-6;
const SCAN_MAX: f64 = 1e6;
const SCAN_PER_DECADE: usize = 20;

/// Solves `G(lambda) = rho`. Scans `|lambda|` geometrically over
/// `[1e-6, 1e6]` on the side given by the sign of `rho` and bisects the
/// smallest-`|lambda|` bracket.
pub fn solve_lambda(rho: f64) -> Result<f64> {
    if rho == 0.0 || !rho.is_finite() {
        return Err(Error::domain("solve_lambda requires a finite rho != 0 (G vanishes only at lambda = 0)"));
    }
    let sign = rho.signum();
    let f = |mag: f64| ratio_g(sign * mag).map(|g| g - rho);
    let decades = (SCAN_MAX / SCAN_MIN).log10().round() as usize;
    let steps = decades * SCAN_PER_DECADE;
    let mut lo = SCAN_MIN;
    let mut f_lo = f(lo)?;
    let mut bracket = None;
    for i in 1..=steps {
        let hi = SCAN_MIN * 10f64.powf(i as f64 / SCAN_PER_DECADE as f64);
        let f_hi = f(hi)?;
        if f_lo == 0.0 {
            return Ok(sign * lo);
        }
        if f_lo.signum() != f_hi.signum() {
            bracket = Some((lo, hi, f_lo));
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    let (mut lo, mut hi, f_lo) = bracket.ok_or_else(|| {
        Error::NoRoot(format!("no sign change of G(lambda) - {rho} for |lambda| in [1e-6, 1e6]"))
    })?;
    let lo_sign = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let candidates = [lo, hi];
    let best = candidates
        .iter()
        .copied()
        .min_by(|x, y| f(*x).unwrap().abs().total_cmp(&f(*y).unwrap().abs()))
        .unwrap();
    let residual = f(best)?.abs();
    if residual > 1e-10 * rho.abs().max(1.0) {
        return Err(Error::NoRoot(format!("bisection stalled with residual {residual:e}")));
    }
    Ok(sign * best)
}

/// A chirp design plus the dilation that carries it to a target `(r, u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowDesign {
    pub design: ChirpDesign,
    pub dilation: f64,
    /// The designed atom after dilation; its quadratic coefficient is `u + r i`.
    pub atom: GaussianAtom,
}

impl WindowDesign {
    /// Largest deviation of the atom's `w` from the target `u + r i`,
    /// relative to `|u + r i|`.
    pub fn residual(&self, r: f64, u: f64) -> f64 {
        let target = C64::new(u, r);
        (self.atom.quad() - target).norm() / target.norm()
    }
}

/// Finds `lambda` with `G(lambda) = r/u` and the dilation taking the
/// designed `h_{r'} phi_{sqrt u'}` to `h_r phi_{sqrt u}`.
pub fn window_design(r: f64, u: f64) -> Result<WindowDesign> {
    if r == 0.0 || !r.is_finite() {
        return Err(Error::domain("window_design requires r != 0"));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain("window_design requires u > 0"));
    }
    let lambda = solve_lambda(r / u)?;
    let design = chirp_design(lambda)?;
    let dilation = (u / design.u).sqrt();
    let atom = product_convolution(design.lambda, design.lambda_prime, design.gamma)?
        .atom
        .dilate(dilation)?;
    Ok(WindowDesign { design, dilation, atom })
}
