//! Invariant batteries run by `chirpframe <command> --selftest`.

use crate::frame_bounds::{canonicalize, estimate_bounds, janssen_certify, LatticeSystem, Resolution};
use crate::frft::{commutation_phase, frft_atom};
use crate::lattice_factor::{chirp_design, factor_lu_rotation, factor_qr, ratio_g, solve_lambda, window_design, Mat2};
use crate::window_algebra::{product_convolution, GaussianAtom};
use crate::zak::{find_zero, theta_adaptive, zak_direct, zak_theta, ThetaMode, ThetaParams};
use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::f64::consts::PI;

const SEED: u64 = 0x5eed_c41f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Module {
    WindowAlgebra,
    LatticeFactor,
    Frft,
    Zak,
    FrameBounds,
}

impl Module {
    pub const ALL: [Module; 5] =
        [Module::WindowAlgebra, Module::LatticeFactor, Module::Frft, Module::Zak, Module::FrameBounds];

    pub fn name(&self) -> &'static str {
        match self {
            Module::WindowAlgebra => "window_algebra",
            Module::LatticeFactor => "lattice_factor",
            Module::Frft => "frft",
            Module::Zak => "zak",
            Module::FrameBounds => "frame_bounds",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Worst residual observed; compared against `tolerance`.
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Battery {
    pub module: &'static str,
    pub passed: usize,
    pub total: usize,
    pub checks: Vec<Check>,
}

impl Battery {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }
}

struct Builder {
    checks: Vec<Check>,
}

impl Builder {
    fn at_most(&mut self, name: &str, residual: f64, tolerance: f64) {
        let passed = residual <= tolerance;
        self.checks.push(Check { name: name.into(), residual, tolerance, passed });
    }

    fn holds(&mut self, name: &str, ok: bool) {
        let residual = if ok { 0.0 } else { 1.0 };
        self.at_most(name, residual, 0.0);
    }

    fn finish(self, module: Module) -> Battery {
        let passed = self.checks.iter().filter(|c| c.passed).count();
        Battery { module: module.name(), passed, total: self.checks.len(), checks: self.checks }
    }
}

fn random_atom(rng: &mut StdRng) -> GaussianAtom {
    GaussianAtom::new(
        C64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5)),
        C64::new(rng.gen_range(0.5..2.0), rng.gen_range(-2.0..2.0)),
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
    )
    .expect("Re w > 0")
}

pub fn run(module: Module) -> Battery {
    let mut rng = StdRng::seed_from_u64(SEED);
    let mut b = Builder { checks: Vec::new() };
    match module {
        Module::WindowAlgebra => window_algebra(&mut rng, &mut b),
        Module::LatticeFactor => lattice_factor(&mut rng, &mut b),
        Module::Frft => frft(&mut rng, &mut b),
        Module::Zak => zak(&mut rng, &mut b),
        Module::FrameBounds => frame_bounds(&mut b),
    }
    b.finish(module)
}

pub fn run_all() -> Vec<Battery> {
    Module::ALL.iter().map(|m| run(*m)).collect()
}

fn worst<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn window_algebra(rng: &mut StdRng, b: &mut Builder) {
    let atoms: Vec<GaussianAtom> = (0..10).map(|_| random_atom(rng)).collect();
    b.at_most(
        "fourier twice is reflection",
        worst(atoms.iter().map(|g| g.fourier().fourier().relative_deviation(&g.reflect()))),
        1e-12,
    );
    b.at_most(
        "fourier preserves the norm",
        worst(atoms.iter().map(|g| (g.fourier().l2_norm() / g.l2_norm() - 1.0).abs())),
        1e-12,
    );
    b.at_most(
        "chirp multiplication composes",
        worst(atoms.iter().map(|g| g.multiply_chirp(0.7).multiply_chirp(-1.9).relative_deviation(&g.multiply_chirp(-1.2)))),
        1e-14,
    );
    let mut shift_res = 0.0f64;
    let mut conv_res = 0.0f64;
    let mut norm_res = 0.0f64;
    for g in &atoms {
        let (a, c, lam) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-2.0..2.0));
        let lam_p: f64 = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let lhs = g.multiply_chirp(lam).tf_shift(a, c);
        let rhs = g.tf_shift(a + lam * c, c).multiply_chirp(lam).scale(C64::from_polar(1.0, -PI * lam * c * c));
        shift_res = shift_res.max(lhs.relative_deviation(&rhs));
        let conv = g.convolve_chirp(lam_p).expect("nonzero rate");
        let lhs = conv.tf_shift(a, c);
        let rhs = g
            .tf_shift(a, a / lam_p + c)
            .convolve_chirp(lam_p)
            .expect("nonzero rate")
            .scale(C64::from_polar(1.0, -PI * a * a / lam_p));
        conv_res = conv_res.max(lhs.relative_deviation(&rhs));
        let both = g.multiply_chirp(lam).convolve_chirp(lam_p).expect("nonzero rate");
        norm_res = norm_res.max((both.l2_norm() * lam_p.abs().sqrt() / g.l2_norm() - 1.0).abs());
    }
    b.at_most("modulation-translation past a chirp", shift_res, 1e-9);
    b.at_most("modulation-translation past a chirp convolution", conv_res, 1e-9);
    b.at_most("chirp convolution scales the norm", norm_res, 1e-9);
    let mut pc = 0.0f64;
    for _ in 0..5 {
        let lam = rng.gen_range(0.3..2.0);
        let lam_p = -rng.gen_range(0.3..2.0);
        let gamma = rng.gen_range(0.5..2.0);
        let closed = product_convolution(lam, lam_p, gamma).expect("valid parameters").atom;
        let route = GaussianAtom::dilated_gaussian(1.0 / gamma)
            .and_then(|g| g.convolve_chirp(lam_p))
            .expect("valid parameters")
            .multiply_chirp(lam);
        pc = pc.max(closed.relative_deviation(&route));
    }
    b.at_most("product-convolution closed form", pc, 1e-10);
}

fn lattice_factor(rng: &mut StdRng, b: &mut Builder) {
    let mut qr = 0.0f64;
    let mut det = 0.0f64;
    for _ in 0..20 {
        let mut q = Mat2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if q.det() < 0.0 {
            q = Mat2::new(q.a, -q.b, q.c, -q.d);
        }
        if q.det() < 1e-3 {
            continue;
        }
        let f = factor_qr(&q).expect("det > 0");
        qr = qr.max(f.reconstruct().max_abs_diff(&q));
        det = det.max((f.alpha * f.beta - q.det()).abs());
    }
    b.at_most("QR reconstruction", qr, 1e-12);
    b.at_most("alpha beta = det Q", det, 1e-12);
    let mut lu = 0.0f64;
    let mut prod = 0.0f64;
    for _ in 0..20 {
        let lam = rng.gen_range(0.1..5.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let f = factor_lu_rotation(lam).expect("lambda != 0");
        lu = lu.max(f.reconstruction_error).max(f.row_dot.abs());
        prod = prod.max((f.d1 * f.d2 - 1.0).abs());
    }
    b.at_most("LU-rotation reconstruction and orthogonal rows", lu, 1e-12);
    b.at_most("d1 d2 = 1", prod, 1e-12);
    let d = chirp_design(1.0).expect("lambda = 1");
    let exact = worst([
        (d.lambda_prime + 2.0).abs(),
        (d.gamma - 2f64.sqrt()).abs(),
        (d.u - 8.0 / 17.0).abs(),
        (d.v + 2.0 / 17.0).abs(),
        (d.r - 15.0 / 17.0).abs(),
    ]);
    b.at_most("chirp design at lambda = 1", exact, 1e-14);
    let mut round = 0.0f64;
    for rho in [-100.0, -1.0, -0.01, 0.01, 1.0, 100.0] {
        let lam = solve_lambda(rho).expect("G is onto");
        round = round.max((ratio_g(lam).expect("lambda != 0") - rho).abs() / rho.abs().max(1.0));
    }
    b.at_most("solve_lambda round trip", round, 1e-10);
    let mut wd = 0.0f64;
    for _ in 0..10 {
        let (r, u) = (rng.gen_range(-3.0..3.0), rng.gen_range(0.2..3.0));
        wd = wd.max(window_design(r, u).map(|w| w.residual(r, u)).unwrap_or(f64::INFINITY));
    }
    b.at_most("window design reproduces (r, u)", wd, 1e-9);
}

fn frft(rng: &mut StdRng, b: &mut Builder) {
    let phi = GaussianAtom::gaussian();
    b.at_most(
        "gaussian is fixed",
        worst([0.3, 1.0, 2.7, 4.4].iter().map(|&t| frft_atom(&phi, t).relative_deviation(&phi))),
        1e-12,
    );
    let mut group = 0.0f64;
    let mut unitary = 0.0f64;
    let mut phase = 0.0f64;
    for _ in 0..10 {
        let g = random_atom(rng);
        let (s, t) = (rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        group = group.max(frft_atom(&frft_atom(&g, s), t).relative_deviation(&frft_atom(&g, s + t)));
        unitary = unitary.max((frft_atom(&g, s).l2_norm() / g.l2_norm() - 1.0).abs());
        let (a, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let rz = Mat2::rotation(s).apply([a, c]);
        let lhs = frft_atom(&g, s).tf_shift(a, c);
        let rhs = frft_atom(&g.tf_shift(rz[0], rz[1]), s).scale(commutation_phase(a, c, s));
        phase = phase.max(lhs.relative_deviation(&rhs));
    }
    b.at_most("group law", group, 1e-8);
    b.at_most("unitarity on atoms", unitary, 1e-10);
    b.at_most("rotation covariance phase", phase, 1e-8);
}

fn zak(rng: &mut StdRng, b: &mut Builder) {
    let mut routes = 0.0f64;
    let mut quasi = 0.0f64;
    for _ in 0..20 {
        let (lam, gamma) = (rng.gen_range(-3.0..3.0), rng.gen_range(0.5..2.0));
        let (t, w) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let g = GaussianAtom::chirped_gaussian(lam, gamma * gamma).expect("gamma > 0");
        let direct = zak_direct(&g, t, w, 40).expect("terms > 0").value;
        let theta = zak_theta(lam, gamma, t, w).expect("gamma > 0");
        routes = routes.max((direct - theta).norm());
        let shifted = zak_theta(lam, gamma, t - 1.0, w).expect("gamma > 0");
        quasi = quasi.max((shifted - C64::from_polar(1.0, -2.0 * PI * w) * theta).norm());
        quasi = quasi.max((zak_theta(lam, gamma, t, w - 1.0).expect("gamma > 0") - theta).norm());
    }
    b.at_most("theta route matches direct sum", routes, 1e-10);
    b.at_most("quasi-periodicity", quasi, 1e-10);
    let mut zeros = 0.0f64;
    for q in [C64::new(0.2, 0.0), C64::from_polar(0.5, 0.3)] {
        for m in [-3, -1, 1, 3] {
            let p = ThetaParams::new(-q.powi(m), q).expect("|q| < 1");
            zeros = zeros.max(theta_adaptive(&p, 30, ThetaMode::Product).expect("valid").value.norm());
            zeros = zeros.max(theta_adaptive(&p, 30, ThetaMode::Series).expect("valid").value.norm());
        }
    }
    b.at_most("theta vanishes at -q^m, m odd", zeros, 1e-10);
    match find_zero(1.0, 1.0, 64) {
        Ok(c) => {
            b.at_most("zero at the centre", (c.t - 0.5).abs().max((c.omega - 0.5).abs()), 1e-6);
            b.holds("winding number one", c.winding == 1);
            b.holds("positive simplicity constant", c.simplicity_constant > 0.0);
        }
        Err(_) => b.holds("zero located", false),
    }
}

fn frame_bounds(b: &mut Builder) {
    let q = Mat2::rotation(0.4).mul(&Mat2::upper_shear(0.8)).mul(&Mat2::separable(0.7, 0.9));
    let det = canonicalize(1.5, &q).map(|c| (c.alpha * c.beta - q.det()).abs()).unwrap_or(f64::INFINITY);
    b.at_most("canonical form keeps |det|", det, 1e-12);
    let cert = janssen_certify(&GaussianAtom::gaussian(), 0.5, 0.5, 10);
    b.holds("Janssen certifies (phi, 1/2, 1/2)", cert.map(|c| c.is_certified()).unwrap_or(false));
    let res = Resolution { l: 5.0, n: 256, m: 8 };
    let dense = LatticeSystem::new(GaussianAtom::gaussian(), Mat2::separable(0.5, 0.5))
        .and_then(|s| estimate_bounds(&s, res))
        .map(|e| e.ratio())
        .unwrap_or(0.0);
    b.holds("dense lattice well conditioned", dense > 0.1);
    let critical = LatticeSystem::new(GaussianAtom::gaussian(), Mat2::separable(1.0, 1.0))
        .and_then(|s| estimate_bounds(&s, res))
        .map(|e| e.ratio())
        .unwrap_or(1.0);
    b.holds("critical lattice worse conditioned", critical < dense);
}
