//! Closed-form algebra of generalized Gaussian atoms
//! `g(x) = c * exp(-pi w x^2 + l x)` with `Re w > 0`.
//!
//! The family is closed under chirp multiplication, chirp convolution,
//! Fourier transform, dilation and time-frequency shifts, so every operation
//! here maps an atom to an atom by updating the three complex coefficients.
//! All square roots are principal; every radicand has positive real part.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

/// Half-width and node count of the grid on which atoms are compared.
pub const COMPARE_HALF_WIDTH: f64 = 4.0;
pub const COMPARE_NODES: usize = 257;

/// `c * exp(-pi w x^2 + l x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianAtom {
    amplitude: C64,
    quad: C64,
    lin: C64,
}

/// The unimodular chirp `h_rate(x) = exp(-i pi rate x^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chirp {
    rate: f64,
}

impl Chirp {
    pub fn new(rate: f64) -> Result<Self> {
        if rate == 0.0 || !rate.is_finite() {
            return Err(Error::domain(format!("chirp rate must be finite and nonzero, got {rate}")));
        }
        Ok(Chirp { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn evaluate(&self, x: f64) -> C64 {
        C64::from_polar(1.0, -PI * self.rate * x * x)
    }

    /// The constant in `F(h_rate) = c * h_{-1/rate}`: `|rate|^{-1/2} e^{-i pi/4}`
    /// for positive rates and `|rate|^{-1/2} e^{+i pi/4}` for negative ones.
    pub fn fourier_constant(&self) -> C64 {
        let sign = if self.rate > 0.0 { -1.0 } else { 1.0 };
        C64::from_polar(self.rate.abs().powf(-0.5), sign * PI / 4.0)
    }
}

/// `integral over R of exp(-pi a x^2 + b x) dx` for `Re a > 0`.
pub fn gaussian_integral(a: C64, b: C64) -> C64 {
    (b * b / (4.0 * PI * a)).exp() / a.sqrt()
}

impl GaussianAtom {
    /// Validated atom; rejects `Re w <= 0` and non-finite coefficients.
    pub fn new(amplitude: C64, quad: C64, lin: C64) -> Result<Self> {
        let finite = |z: C64| z.re.is_finite() && z.im.is_finite();
        if !(finite(amplitude) && finite(quad) && finite(lin)) {
            return Err(Error::domain("atom coefficients must be finite"));
        }
        if quad.re <= 0.0 {
            return Err(Error::domain(format!(
                "atom requires Re w > 0, got w = {} {:+}i",
                quad.re, quad.im
            )));
        }
        Ok(GaussianAtom { amplitude, quad, lin })
    }

    /// The standard Gaussian `exp(-pi x^2)`.
    pub fn gaussian() -> Self {
        GaussianAtom { amplitude: C64::new(1.0, 0.0), quad: C64::new(1.0, 0.0), lin: C64::new(0.0, 0.0) }
    }

    /// `exp(-pi gamma^2 x^2)`.
    pub fn dilated_gaussian(gamma: f64) -> Result<Self> {
        Self::gaussian().dilate(gamma)
    }

    /// `h_r * phi_{sqrt u}`, i.e. `w = u + r i`.
    pub fn chirped_gaussian(r: f64, u: f64) -> Result<Self> {
        Self::new(C64::new(1.0, 0.0), C64::new(u, r), C64::new(0.0, 0.0))
    }

    pub fn amplitude(&self) -> C64 {
        self.amplitude
    }

    pub fn quad(&self) -> C64 {
        self.quad
    }

    pub fn lin(&self) -> C64 {
        self.lin
    }

    pub fn evaluate(&self, x: f64) -> C64 {
        self.amplitude * (-PI * self.quad * x * x + self.lin * x).exp()
    }

    /// Multiply by a complex constant.
    pub fn scale(&self, factor: C64) -> Self {
        GaussianAtom { amplitude: self.amplitude * factor, ..*self }
    }

    /// Pointwise product with `h_rate`; `rate = 0` is the identity.
    pub fn multiply_chirp(&self, rate: f64) -> Self {
        GaussianAtom { quad: self.quad + I * rate, ..*self }
    }

    /// `F g(xi) = integral g(x) e^{-2 pi i xi x} dx`.
    pub fn fourier(&self) -> Self {
        self.fourier_with_sign(-1.0)
    }

    pub fn inverse_fourier(&self) -> Self {
        self.fourier_with_sign(1.0)
    }

    // Completing the square in exp(-pi w x^2 + (l + 2 pi i s xi) x) gives
    // w^{-1/2} exp(l^2 / (4 pi w)) exp(-pi xi^2 / w + i s (l / w) xi).
    fn fourier_with_sign(&self, sign: f64) -> Self {
        let w = self.quad;
        GaussianAtom {
            amplitude: self.amplitude * (self.lin * self.lin / (4.0 * PI * w)).exp() / w.sqrt(),
            quad: w.inv(),
            lin: I * sign * self.lin / w,
        }
    }

    /// `h_rate * g`, defined as `F^{-1}(F(h_rate) F(g))`.
    pub fn convolve_chirp(&self, rate: f64) -> Result<Self> {
        let chirp = Chirp::new(rate)?;
        Ok(self
            .fourier()
            .multiply_chirp(-1.0 / rate)
            .scale(chirp.fourier_constant())
            .inverse_fourier())
    }

    /// `M_a T_b g(x) = e^{2 pi i a x} g(x - b)`.
    pub fn tf_shift(&self, a: f64, b: f64) -> Self {
        let w = self.quad;
        GaussianAtom {
            amplitude: self.amplitude * (-PI * w * b * b - self.lin * b).exp(),
            quad: w,
            lin: self.lin + 2.0 * PI * w * b + 2.0 * PI * I * a,
        }
    }

    /// `x -> g(gamma x)` for `gamma > 0`.
    pub fn dilate(&self, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::domain(format!("dilation requires gamma > 0, got {gamma}")));
        }
        Ok(self.rescale(gamma))
    }

    /// `x -> g(s x)` for any nonzero real `s`.
    pub(crate) fn rescale(&self, s: f64) -> Self {
        GaussianAtom { amplitude: self.amplitude, quad: self.quad * s * s, lin: self.lin * s }
    }

    /// `x -> g(-x)`.
    pub fn reflect(&self) -> Self {
        self.rescale(-1.0)
    }

    pub fn l2_norm(&self) -> f64 {
        let a = self.quad.re;
        let b = self.lin.re;
        (self.amplitude.norm_sqr() * (b * b / (2.0 * PI * a)).exp() / (2.0 * a).sqrt()).sqrt()
    }

    /// `<self, other> = integral self(x) conj(other(x)) dx`.
    pub fn inner_product(&self, other: &GaussianAtom) -> C64 {
        let a = self.quad + other.quad.conj();
        let b = self.lin + other.lin.conj();
        let amp = self.amplitude * other.amplitude.conj();
        if amp == C64::new(0.0, 0.0) {
            return amp;
        }
        amp * gaussian_integral(a, b)
    }

    /// Largest pointwise deviation from `other` on the comparison grid,
    /// relative to the largest modulus of `self` there.
    pub fn relative_deviation(&self, other: &GaussianAtom) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for n in 0..COMPARE_NODES {
            let x = -COMPARE_HALF_WIDTH + 2.0 * COMPARE_HALF_WIDTH * n as f64 / (COMPARE_NODES - 1) as f64;
            let v = self.evaluate(x);
            worst = worst.max((v - other.evaluate(x)).norm());
            scale = scale.max(v.norm());
        }
        worst / scale.max(f64::MIN_POSITIVE)
    }
}

/// Closed form of `h_lambda * (h_lambda' conv phi_{1/gamma}) = s * h_{v+lambda} * phi_{sqrt u}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProductConvolution {
    pub atom: GaussianAtom,
    pub s: C64,
    pub u: f64,
    pub v: f64,
}

impl ProductConvolution {
    /// Chirp rate of the result, `v + lambda`.
    pub fn chirp_rate(&self) -> f64 {
        self.atom.quad.im
    }
}

pub fn product_convolution(lambda: f64, lambda_prime: f64, gamma: f64) -> Result<ProductConvolution> {
    if lambda == 0.0 {
        return Err(Error::domain("product_convolution requires lambda != 0"));
    }
    if !(gamma > 0.0) {
        return Err(Error::domain(format!("product_convolution requires gamma > 0, got {gamma}")));
    }
    let chirp = Chirp::new(lambda_prime)?;
    let inv = 1.0 / lambda_prime;
    let denom = gamma.powi(4) + inv * inv;
    let u = gamma * gamma / denom;
    let v = inv / denom;
    let eta = C64::new(u, v).sqrt();
    let s = chirp.fourier_constant() * gamma * eta;
    let atom = GaussianAtom::new(s, C64::new(u, v + lambda), C64::new(0.0, 0.0))?;
    Ok(ProductConvolution { atom, s, u, v })
}

#[cfg(test)]
#[path = "../tests/common/oracle.rs"]
mod oracle;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn make_atom_examples() {
        let phi = GaussianAtom::new(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(phi, GaussianAtom::gaussian());
        let phi2 = GaussianAtom::new(c(1.0, 0.0), c(4.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(phi2, GaussianAtom::dilated_gaussian(2.0).unwrap());
        assert!(matches!(
            GaussianAtom::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(GaussianAtom::new(c(1.0, 0.0), c(-1.0, 3.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let phi = GaussianAtom::gaussian();
        assert_eq!(phi.evaluate(0.0), c(1.0, 0.0));
        assert_relative_eq!(phi.evaluate(1.0).re, (-PI).exp(), max_relative = 1e-15);
        assert_relative_eq!(phi.evaluate(1.0).re, 0.043_213_918_263_772_25, max_relative = 1e-12);
        let chirped = phi.multiply_chirp(1.0);
        let expected = Chirp::new(1.0).unwrap().evaluate(1.0) * phi.evaluate(1.0);
        assert!((chirped.evaluate(1.0) - expected).norm() < 1e-16);
        assert!((chirped.evaluate(1.0) - (-PI).exp() * C64::from_polar(1.0, -PI)).norm() < 1e-16);
    }

    #[test]
    fn multiply_chirp_examples() {
        let phi = GaussianAtom::gaussian();
        assert_eq!(phi.multiply_chirp(0.0), phi);
        assert_eq!(phi.multiply_chirp(1.0).quad(), c(1.0, 1.0));
        let g = GaussianAtom::new(c(0.5, 0.2), c(1.3, -0.4), c(0.2, 0.7)).unwrap();
        let dev = oracle::grid_relative_deviation(
            |x| g.multiply_chirp(1.7).evaluate(x),
            |x| oracle::chirp(1.7, x) * g.evaluate(x),
            -3.0,
            3.0,
            101,
        );
        assert!(dev < 1e-14, "{dev}");
    }

    #[test]
    fn fourier_examples() {
        let phi = GaussianAtom::gaussian();
        assert!(phi.fourier().relative_deviation(&phi) < 1e-15);
        let gamma = 2.0;
        let expected = GaussianAtom::dilated_gaussian(1.0 / gamma).unwrap().scale(c(1.0 / gamma, 0.0));
        assert!(GaussianAtom::dilated_gaussian(gamma).unwrap().fourier().relative_deviation(&expected) < 1e-15);

        let g = GaussianAtom::new(c(1.0, 0.0), c(1.0, 1.0), c(0.0, 0.0)).unwrap();
        let ghat = g.fourier();
        for xi in [0.0, 0.5, 1.0] {
            let q = oracle::fourier_at(|x| g.evaluate(x), xi);
            assert!((ghat.evaluate(xi) - q).norm() < 1e-8, "xi={xi}");
        }
    }

    #[test]
    fn fourier_with_linear_term_matches_quadrature() {
        let g = GaussianAtom::new(c(0.8, -0.3), c(1.4, 0.6), c(0.9, -1.7)).unwrap();
        let ghat = g.fourier();
        let ginv = g.inverse_fourier();
        for xi in [-1.2, -0.3, 0.0, 0.45, 1.1] {
            let q = oracle::fourier_at(|x| g.evaluate(x), xi);
            assert!((ghat.evaluate(xi) - q).norm() < 1e-10 * q.norm().max(1.0), "xi={xi}");
            let qi = oracle::fourier_at(|x| g.evaluate(x), -xi);
            assert!((ginv.evaluate(xi) - qi).norm() < 1e-10 * qi.norm().max(1.0));
        }
    }

    #[test]
    fn fourier_involution_is_reflection() {
        let g = GaussianAtom::new(c(1.1, 0.4), c(0.7, -0.9), c(0.3, 0.8)).unwrap();
        assert!(g.fourier().fourier().relative_deviation(&g.reflect()) < 1e-10);
        assert!(g.fourier().inverse_fourier().relative_deviation(&g) < 1e-12);
    }

    #[test]
    fn convolve_chirp_examples() {
        let phi = GaussianAtom::gaussian();
        let conv = phi.convolve_chirp(-2.0).unwrap();
        assert_relative_eq!(conv.quad().re, 4.0 / 5.0, epsilon = 1e-15);
        assert_relative_eq!(conv.quad().im, -2.0 / 5.0, epsilon = 1e-15);
        assert_eq!(conv.lin(), c(0.0, 0.0));
        assert_relative_eq!(Chirp::new(-2.0).unwrap().fourier_constant().norm(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(phi.convolve_chirp(0.0), Err(Error::Domain(_))));

        for x in [0.0, 0.7, 1.3] {
            let direct = oracle::chirp_convolution(|y| phi.evaluate(y), -2.0, x, 4096);
            let closed = conv.evaluate(x);
            assert!((closed - direct).norm() <= 1e-6 * direct.norm(), "x={x}");
        }
    }

    #[test]
    fn fourier_constant_signs() {
        let pos = Chirp::new(4.0).unwrap().fourier_constant();
        let neg = Chirp::new(-4.0).unwrap().fourier_constant();
        assert!((pos - C64::from_polar(0.5, -PI / 4.0)).norm() < 1e-16);
        assert!((neg - C64::from_polar(0.5, PI / 4.0)).norm() < 1e-16);
        // The phase of the constant is visible pointwise in the convolution.
        let g = GaussianAtom::new(c(1.0, 0.0), c(1.2, 0.3), c(0.2, 0.0)).unwrap();
        for rate in [0.7, -1.9] {
            let conv = g.convolve_chirp(rate).unwrap();
            for x in [-0.4, 0.0, 0.9] {
                let direct = oracle::chirp_convolution(|y| g.evaluate(y), rate, x, 4096);
                assert!((conv.evaluate(x) - direct).norm() <= 1e-6 * direct.norm(), "rate={rate} x={x}");
            }
        }
    }

    #[test]
    fn tf_shift_examples() {
        let g = GaussianAtom::new(c(0.9, 0.1), c(1.2, 0.5), c(0.3, -0.2)).unwrap();
        assert!(g.tf_shift(0.0, 0.0).relative_deviation(&g) < 1e-16);
        let (a, b) = (0.8, -0.6);
        let dev = oracle::grid_relative_deviation(
            |x| g.tf_shift(a, b).evaluate(x),
            |x| C64::from_polar(1.0, 2.0 * PI * a * x) * g.evaluate(x - b),
            -3.0,
            3.0,
            101,
        );
        assert!(dev < 1e-13, "{dev}");
    }

    #[test]
    fn chirp_multiplication_commutes_with_shifts_up_to_shear() {
        // pi(z)(h_lambda f) = e^{-pi i lambda b^2} h_lambda (pi(a + lambda b, b) f)
        let (a, b, lambda) = (0.3, 0.7, 1.0);
        let f = GaussianAtom::gaussian();
        let lhs = f.multiply_chirp(lambda).tf_shift(a, b);
        let rhs = f
            .tf_shift(a + lambda * b, b)
            .multiply_chirp(lambda)
            .scale(C64::from_polar(1.0, -PI * lambda * b * b));
        let dev = oracle::grid_relative_deviation(|x| lhs.evaluate(x), |x| rhs.evaluate(x), -3.0, 3.0, 121);
        assert!(dev < 1e-13, "{dev}");
    }

    #[test]
    fn commutation_relation_phase() {
        let g = GaussianAtom::new(c(1.0, 0.0), c(0.9, 0.3), c(0.0, 0.0)).unwrap();
        let (a, b, a2, b2) = (0.4, -0.3, 1.1, 0.6);
        let lhs = g.tf_shift(a2, b2).tf_shift(a, b);
        let rhs = g
            .tf_shift(a, b)
            .tf_shift(a2, b2)
            .scale(C64::from_polar(1.0, 2.0 * PI * (a * b2 - a2 * b)));
        assert!(lhs.relative_deviation(&rhs) < 1e-13);
    }

    #[test]
    fn dilate_examples() {
        let phi = GaussianAtom::gaussian();
        assert_eq!(phi.dilate(2.0).unwrap(), GaussianAtom::dilated_gaussian(2.0).unwrap());
        assert!(phi.dilate(0.0).is_err());
        assert!(phi.dilate(-1.0).is_err());
        let gamma = 3.0;
        let n0 = phi.l2_norm();
        let n1 = phi.dilate(gamma).unwrap().l2_norm();
        assert_relative_eq!(n0 * n0, gamma * n1 * n1, max_relative = 1e-14);
        let g = GaussianAtom::new(c(1.0, 0.5), c(0.8, 0.2), c(0.1, 0.4)).unwrap();
        let twice = g.dilate(1.5).unwrap().dilate(0.4).unwrap();
        assert!(twice.relative_deviation(&g.dilate(0.6).unwrap()) < 1e-14);
    }

    #[test]
    fn l2_norm_examples() {
        assert_relative_eq!(GaussianAtom::gaussian().l2_norm(), 2f64.powf(-0.25), max_relative = 1e-15);
        let g = GaussianAtom::new(c(2.0, 0.0), c(1.5, 0.5), c(0.3, 0.0)).unwrap();
        let q = oracle::norm_sq(|x| g.evaluate(x), false).sqrt();
        assert!((g.l2_norm() - q).abs() < 1e-10);
        // Lemma-style identity: ||h_l (h_l' conv f)|| = |l'|^{-1/2} ||f||.
        let phi = GaussianAtom::gaussian();
        let lhs = phi.convolve_chirp(-2.0).unwrap().multiply_chirp(1.0).l2_norm();
        assert_relative_eq!(lhs, 0.5f64.sqrt() * phi.l2_norm(), max_relative = 1e-14);
    }

    #[test]
    fn inner_product_examples() {
        let phi = GaussianAtom::gaussian();
        assert_relative_eq!(phi.inner_product(&phi).re, 0.5f64.sqrt(), max_relative = 1e-15);
        let shifted = phi.tf_shift(0.0, 2.0);
        let ip = phi.inner_product(&shifted);
        let q = oracle::inner(|x| phi.evaluate(x), |x| shifted.evaluate(x));
        assert!((ip - q).norm() < 1e-13);
        assert_relative_eq!(ip.re, (-2.0 * PI).exp() / 2f64.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(ip.re, 0.001_320_481_419_068_25, max_relative = 1e-12);
        assert!(ip.im.abs() < 1e-18);
    }

    #[test]
    fn inner_product_general_atoms_match_quadrature() {
        let g1 = GaussianAtom::new(c(0.7, -0.2), c(1.3, 0.8), c(0.4, 1.1)).unwrap();
        let g2 = GaussianAtom::new(c(1.2, 0.5), c(0.9, -0.5), c(-0.3, -2.0)).unwrap();
        let q = oracle::inner(|x| g1.evaluate(x), |x| g2.evaluate(x));
        assert!((g1.inner_product(&g2) - q).norm() < 1e-12);
        assert!((g1.inner_product(&g2) - g2.inner_product(&g1).conj()).norm() < 1e-15);
    }

    #[test]
    fn product_convolution_examples() {
        let pc = product_convolution(1.0, -2.0, 2f64.sqrt()).unwrap();
        assert_relative_eq!(pc.u, 8.0 / 17.0, epsilon = 1e-15);
        assert_relative_eq!(pc.v, -2.0 / 17.0, epsilon = 1e-15);
        assert_relative_eq!(pc.chirp_rate(), 15.0 / 17.0, epsilon = 1e-15);
        let lam: f64 = 1.0;
        let p = (lam * lam + 1.0).powi(4);
        assert_relative_eq!(pc.chirp_rate(), lam * (p - 1.0) / (p + lam * lam), epsilon = 1e-15);

        // Columns-orthogonal case: lambda (lambda' + 1/lambda') = -1, gamma = 1.
        let trivial = product_convolution(0.4, -2.0, 1.0).unwrap();
        assert!(trivial.chirp_rate().abs() < 1e-15);

        for (lam, lp, gamma) in [(1.0, -2.0, 2f64.sqrt()), (-0.6, 1.3, 0.8), (2.5, -0.4, 1.7)] {
            let pc = product_convolution(lam, lp, gamma).unwrap();
            let composed = GaussianAtom::dilated_gaussian(1.0 / gamma)
                .unwrap()
                .convolve_chirp(lp)
                .unwrap()
                .multiply_chirp(lam);
            assert!(pc.atom.relative_deviation(&composed) < 1e-10);
        }
        assert!(product_convolution(0.0, 1.0, 1.0).is_err());
        assert!(product_convolution(1.0, 0.0, 1.0).is_err());
        assert!(product_convolution(1.0, 1.0, 0.0).is_err());
    }
}
