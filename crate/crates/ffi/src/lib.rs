//! C ABI for chirpframe.
//!
//! Every fallible function returns a `CfStatus` and writes its result through
//! an out-pointer. On failure the message is kept per thread and can be read
//! with `cf_last_error_message`. Atoms are opaque handles released with
//! `cf_atom_free`.

#![allow(clippy::missing_safety_doc)]

use chirpframe::frame_bounds::{estimate_bounds, janssen_certify, Certification, LatticeSystem, Resolution};
use chirpframe::frft::frft_atom;
use chirpframe::lattice_factor::{chirp_design, factor_qr, solve_lambda, Mat2};
use chirpframe::window_algebra::GaussianAtom;
use chirpframe::zak::{find_zero, zak_theta};
use chirpframe::{Complex64, Error};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    Ok = 0,
    Domain = 1,
    Grid = 2,
    Degenerate = 3,
    NoRoot = 4,
    NoZero = 5,
    MultipleZero = 6,
    Contour = 7,
    NullPointer = 8,
    Panic = 9,
}

impl From<&Error> for CfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => CfStatus::Domain,
            Error::Grid(_) => CfStatus::Grid,
            Error::Degenerate(_) => CfStatus::Degenerate,
            Error::NoRoot(_) => CfStatus::NoRoot,
            Error::NoZero(_) => CfStatus::NoZero,
            Error::MultipleZero { .. } => CfStatus::MultipleZero,
            Error::Contour(_) => CfStatus::Contour,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

fn guard<F: FnOnce() -> Result<(), CfStatus>>(f: F) -> CfStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            CfStatus::Panic
        }
    }
}

fn fail(e: Error) -> CfStatus {
    let status = CfStatus::from(&e);
    set_error(e.to_string());
    status
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, CfStatus> {
    p.as_mut().ok_or_else(|| {
        set_error("output pointer is NULL".into());
        CfStatus::NullPointer
    })
}

unsafe fn input<'a, T>(p: *const T) -> Result<&'a T, CfStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("input pointer is NULL".into());
        CfStatus::NullPointer
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CfComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for CfComplex {
    fn from(z: Complex64) -> Self {
        CfComplex { re: z.re, im: z.im }
    }
}

impl From<CfComplex> for Complex64 {
    fn from(z: CfComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Opaque `c exp(-pi w x^2 + l x)`.
pub struct CfAtom(GaussianAtom);

fn boxed(g: GaussianAtom) -> *mut CfAtom {
    Box::into_raw(Box::new(CfAtom(g)))
}

#[no_mangle]
pub unsafe extern "C" fn cf_atom_new(amplitude: CfComplex, quad: CfComplex, lin: CfComplex, atom: *mut *mut CfAtom) -> CfStatus {
    guard(|| {
        let slot = out(atom)?;
        let g = GaussianAtom::new(amplitude.into(), quad.into(), lin.into()).map_err(fail)?;
        *slot = boxed(g);
        Ok(())
    })
}

/// The standard Gaussian `exp(-pi x^2)`.
#[no_mangle]
pub extern "C" fn cf_atom_gaussian() -> *mut CfAtom {
    boxed(GaussianAtom::gaussian())
}

#[no_mangle]
pub unsafe extern "C" fn cf_atom_free(atom: *mut CfAtom) {
    if !atom.is_null() {
        drop(Box::from_raw(atom));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cf_atom_coefficients(
    atom: *const CfAtom,
    amplitude: *mut CfComplex,
    quad: *mut CfComplex,
    lin: *mut CfComplex,
) -> CfStatus {
    guard(|| {
        let g = &input(atom)?.0;
        *out(amplitude)? = g.amplitude().into();
        *out(quad)? = g.quad().into();
        *out(lin)? = g.lin().into();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cf_atom_evaluate(atom: *const CfAtom, x: f64, value: *mut CfComplex) -> CfStatus {
    guard(|| {
        *out(value)? = input(atom)?.0.evaluate(x).into();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cf_atom_l2_norm(atom: *const CfAtom, norm: *mut f64) -> CfStatus {
    guard(|| {
        *out(norm)? = input(atom)?.0.l2_norm();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cf_atom_inner_product(f: *const CfAtom, g: *const CfAtom, value: *mut CfComplex) -> CfStatus {
    guard(|| {
        *out(value)? = input(f)?.0.inner_product(&input(g)?.0).into();
        Ok(())
    })
}

/// New handle holding the Fourier transform.
#[no_mangle]
pub unsafe extern "C" fn cf_atom_fourier(atom: *const CfAtom, result: *mut *mut CfAtom) -> CfStatus {
    guard(|| {
        let slot = out(result)?;
        *slot = boxed(input(atom)?.0.fourier());
        Ok(())
    })
}

/// New handle holding `h_rate * g`.
#[no_mangle]
pub unsafe extern "C" fn cf_atom_multiply_chirp(atom: *const CfAtom, rate: f64, result: *mut *mut CfAtom) -> CfStatus {
    guard(|| {
        let slot = out(result)?;
        *slot = boxed(input(atom)?.0.multiply_chirp(rate));
        Ok(())
    })
}

/// New handle holding the fractional Fourier transform by `theta`.
#[no_mangle]
pub unsafe extern "C" fn cf_atom_frft(atom: *const CfAtom, theta: f64, result: *mut *mut CfAtom) -> CfStatus {
    guard(|| {
        let slot = out(result)?;
        *slot = boxed(frft_atom(&input(atom)?.0, theta));
        Ok(())
    })
}

/// `Q = R_theta U_lambda D_{alpha,beta}`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CfQrFactors {
    pub theta: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// `matrix` points to four entries in row-major order.
#[no_mangle]
pub unsafe extern "C" fn cf_factor_qr(matrix: *const f64, factors: *mut CfQrFactors) -> CfStatus {
    guard(|| {
        let m = read_matrix(matrix)?;
        let f = factor_qr(&m).map_err(fail)?;
        *out(factors)? = CfQrFactors { theta: f.theta, lambda: f.lambda, alpha: f.alpha, beta: f.beta };
        Ok(())
    })
}

unsafe fn read_matrix(matrix: *const f64) -> Result<Mat2, CfStatus> {
    input(matrix)?;
    let e = std::slice::from_raw_parts(matrix, 4);
    Ok(Mat2::from_row_major([e[0], e[1], e[2], e[3]]))
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CfChirpDesign {
    pub lambda: f64,
    pub lambda_prime: f64,
    pub gamma: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub s: CfComplex,
}

#[no_mangle]
pub unsafe extern "C" fn cf_chirp_design(lambda: f64, design: *mut CfChirpDesign) -> CfStatus {
    guard(|| {
        let d = chirp_design(lambda).map_err(fail)?;
        *out(design)? = CfChirpDesign {
            lambda: d.lambda,
            lambda_prime: d.lambda_prime,
            gamma: d.gamma,
            u: d.u,
            v: d.v,
            r: d.r,
            s: d.s.into(),
        };
        Ok(())
    })
}

/// Nonzero `lambda` with `G(lambda) = rho`.
#[no_mangle]
pub unsafe extern "C" fn cf_solve_lambda(rho: f64, lambda: *mut f64) -> CfStatus {
    guard(|| {
        *out(lambda)? = solve_lambda(rho).map_err(fail)?;
        Ok(())
    })
}

/// `Z(h_lambda phi_gamma)(t, omega)`.
#[no_mangle]
pub unsafe extern "C" fn cf_zak_theta(lambda: f64, gamma: f64, t: f64, omega: f64, value: *mut CfComplex) -> CfStatus {
    guard(|| {
        *out(value)? = zak_theta(lambda, gamma, t, omega).map_err(fail)?.into();
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CfZeroCertificate {
    pub t: f64,
    pub omega: f64,
    pub winding: i64,
    pub simplicity_constant: f64,
    pub search_resolution: usize,
    pub residual: f64,
}

#[no_mangle]
pub unsafe extern "C" fn cf_find_zero(lambda: f64, gamma: f64, n: usize, certificate: *mut CfZeroCertificate) -> CfStatus {
    guard(|| {
        let slot = out(certificate)?;
        let c = find_zero(lambda, gamma, n).map_err(fail)?;
        *slot = CfZeroCertificate {
            t: c.t,
            omega: c.omega,
            winding: c.winding,
            simplicity_constant: c.simplicity_constant,
            search_resolution: c.search_resolution,
            residual: c.residual,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfResolution {
    pub l: f64,
    pub n: usize,
    pub m: usize,
}

/// The default grid: `L = 6`, `N = 512`, `M = 12`.
#[no_mangle]
pub extern "C" fn cf_resolution_default() -> CfResolution {
    let r = Resolution::default();
    CfResolution { l: r.l, n: r.n, m: r.m }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CfBoundEstimate {
    pub a_est: f64,
    pub b_est: f64,
    /// Estimates with twice the grid nodes.
    pub refined_a_est: f64,
    pub refined_b_est: f64,
    pub nodes: usize,
    pub atoms: usize,
    pub test_dimension: usize,
}

/// Finite-section bounds of `G(window, Q Z^2)`; `matrix` is row-major.
#[no_mangle]
pub unsafe extern "C" fn cf_estimate_bounds(
    window: *const CfAtom,
    matrix: *const f64,
    resolution: CfResolution,
    estimate: *mut CfBoundEstimate,
) -> CfStatus {
    guard(|| {
        let slot = out(estimate)?;
        let system = LatticeSystem::new(input(window)?.0, read_matrix(matrix)?).map_err(fail)?;
        let res = Resolution { l: resolution.l, n: resolution.n, m: resolution.m };
        let e = estimate_bounds(&system, res).map_err(fail)?;
        *slot = CfBoundEstimate {
            a_est: e.a_est,
            b_est: e.b_est,
            refined_a_est: e.refined.a_est,
            refined_b_est: e.refined.b_est,
            nodes: e.n,
            atoms: e.atoms,
            test_dimension: e.test_dimension,
        };
        Ok(())
    })
}

/// `certified` is 1 when `a_lower > 0` was established; otherwise `margin`
/// carries the failed dominance margin and the bounds are zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CfCertification {
    pub certified: i32,
    pub a_lower: f64,
    pub b_upper: f64,
    pub margin: f64,
    pub tail: f64,
}

#[no_mangle]
pub unsafe extern "C" fn cf_janssen_certify(
    window: *const CfAtom,
    alpha: f64,
    beta: f64,
    terms: usize,
    certification: *mut CfCertification,
) -> CfStatus {
    guard(|| {
        let slot = out(certification)?;
        let c = janssen_certify(&input(window)?.0, alpha, beta, terms).map_err(fail)?;
        *slot = match c {
            Certification::Certified { a_lower, b_upper, tail, .. } => {
                CfCertification { certified: 1, a_lower, b_upper, margin: a_lower * alpha * beta, tail }
            }
            Certification::Inconclusive { margin, tail, .. } => {
                CfCertification { certified: 0, a_lower: 0.0, b_upper: 0.0, margin, tail }
            }
        };
        Ok(())
    })
}
