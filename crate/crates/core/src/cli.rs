//! Command-line front end.

use crate::error::Error;
use crate::frame_bounds::{
    canonicalize, estimate_bounds, janssen_certify, sweep_det, LatticeSystem, Resolution, SweepRow,
};
use crate::frft::{frft_atom, frft_numeric, SampledSignal};
use crate::lattice_factor::{chirp_design, factor_lu_rotation, factor_qr, window_design, Mat2};
use crate::selftest::{self, Battery, Module};
use crate::window_algebra::GaussianAtom;
use crate::zak::{find_zero, theta_eval, zak_direct, zak_grid, zak_theta, ThetaMode, ThetaParams, ZakGrid};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

pub const THREADS_ENV: &str = "CHIRPFRAME_THREADS";

#[derive(Debug, Parser)]
#[command(name = "chirpframe", version, about = "Chirped-Gaussian Gabor systems", allow_negative_numbers = true)]
pub struct Cli {
    /// Output format; defaults to json (svg for zak-heatmap).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// key=value file supplying the command and its parameters.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Args)]
pub struct SelfTestFlag {
    /// Run this module's invariant battery instead of the command.
    #[arg(long)]
    pub selftest: bool,
}

#[derive(Debug, Args)]
pub struct ResolutionArgs {
    #[arg(long, default_value_t = 6.0)]
    pub l: f64,
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    #[arg(long, default_value_t = 12)]
    pub m: usize,
}

impl ResolutionArgs {
    fn resolution(&self) -> Resolution {
        Resolution { l: self.l, n: self.n, m: self.m }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Q = R_theta U_lambda D_{alpha,beta}.
    #[command(allow_negative_numbers = true)]
    Factor {
        /// Row-major a,b,c,d.
        #[arg(long, value_parser = parse_matrix, allow_hyphen_values = true, required_unless_present = "selftest")]
        matrix: Option<Mat2>,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// L_{lambda'} U_lambda = diag(d1, d2) R_theta.
    #[command(allow_negative_numbers = true)]
    LuRotation {
        #[arg(long, required_unless_present = "selftest")]
        lambda: Option<f64>,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Window parameters tied to a chirp rate.
    #[command(allow_negative_numbers = true)]
    ChirpDesign {
        #[arg(long, required_unless_present = "selftest")]
        lambda: Option<f64>,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Design producing the window h_r phi_{sqrt u}.
    #[command(allow_negative_numbers = true)]
    WindowDesign {
        #[arg(long, required_unless_present = "selftest")]
        r: Option<f64>,
        #[arg(long, required_unless_present = "selftest")]
        u: Option<f64>,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Numeric FrFT of the Gaussian against the exact transform.
    #[command(allow_negative_numbers = true)]
    FrftCheck {
        #[arg(long, default_value_t = 1.1)]
        theta: f64,
        #[arg(long, default_value_t = 2048)]
        nodes: usize,
        #[arg(long, default_value_t = 8.0)]
        half_width: f64,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Z(h_lambda phi_gamma)(t, omega) by both routes.
    #[command(allow_negative_numbers = true)]
    ZakEval {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 0.0)]
        omega: f64,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Locate and certify the zero of Z(h_lambda phi_gamma).
    #[command(allow_negative_numbers = true)]
    ZakZeros {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// |Z| on the unit square.
    #[command(allow_negative_numbers = true)]
    ZakHeatmap {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Theta(z, q) by series and product.
    #[command(allow_negative_numbers = true)]
    Theta {
        #[arg(long, default_value_t = 1.0)]
        z_re: f64,
        #[arg(long, default_value_t = 0.0)]
        z_im: f64,
        #[arg(long, default_value_t = 0.1)]
        q_re: f64,
        #[arg(long, default_value_t = 0.0)]
        q_im: f64,
        #[arg(long, default_value_t = 60)]
        terms: usize,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Finite-section frame bounds of G(h_chirp phi_gamma, Q Z^2).
    #[command(allow_negative_numbers = true)]
    FrameEstimate {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        chirp: f64,
        #[arg(long, value_parser = parse_matrix, allow_hyphen_values = true, default_value = "0.5,0,0,0.5")]
        matrix: Mat2,
        #[command(flatten)]
        res: ResolutionArgs,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Janssen certificate for G(h_lambda phi, alpha Z x beta Z).
    #[command(allow_negative_numbers = true)]
    FrameCertify {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = 10)]
        terms: usize,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Separable chirped system equivalent to G(phi_gamma, Q Z^2).
    #[command(allow_negative_numbers = true)]
    Canonicalize {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, value_parser = parse_matrix, allow_hyphen_values = true, required_unless_present = "selftest")]
        matrix: Option<Mat2>,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Bounds along sqrt|s| shape for each determinant s.
    #[command(allow_negative_numbers = true)]
    SweepDet {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, value_parser = parse_matrix, allow_hyphen_values = true, default_value = "1,0,0,1")]
        shape: Mat2,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.5,0.8,0.95,1.0")]
        dets: Vec<f64>,
        #[command(flatten)]
        res: ResolutionArgs,
        #[command(flatten)]
        st: SelfTestFlag,
    },
    /// Run invariant batteries.
    #[command(allow_negative_numbers = true)]
    Selftest {
        #[arg(long, value_enum)]
        module: Option<ModuleArg>,
        #[command(flatten)]
        st: SelfTestFlag,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModuleArg {
    WindowAlgebra,
    LatticeFactor,
    Frft,
    Zak,
    FrameBounds,
}

impl From<ModuleArg> for Module {
    fn from(m: ModuleArg) -> Self {
        match m {
            ModuleArg::WindowAlgebra => Module::WindowAlgebra,
            ModuleArg::LatticeFactor => Module::LatticeFactor,
            ModuleArg::Frft => Module::Frft,
            ModuleArg::Zak => Module::Zak,
            ModuleArg::FrameBounds => Module::FrameBounds,
        }
    }
}

fn parse_matrix(s: &str) -> Result<Mat2, String> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad matrix entry {p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let arr: [f64; 4] = vals.try_into().map_err(|v: Vec<f64>| format!("matrix needs 4 entries, got {}", v.len()))?;
    let m = Mat2::from_row_major(arr);
    if !m.is_finite() {
        return Err("matrix entries must be finite".into());
    }
    Ok(m)
}

/// Output of one command before formatting.
enum Output {
    Record(Value),
    Table(Vec<Value>),
    Heatmap { grid: ZakGrid, zero: Option<(f64, f64)> },
}

struct Outcome {
    output: Output,
    /// Exit code forced by the command itself (failed selftest).
    code: i32,
}

impl From<Output> for Outcome {
    fn from(output: Output) -> Self {
        Outcome { output, code: 0 }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn complex(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn atom_value(g: &GaussianAtom) -> Value {
    json!({ "amplitude": complex(g.amplitude()), "quad": complex(g.quad()), "lin": complex(g.lin()) })
}

fn batteries(list: Vec<Battery>) -> Outcome {
    let code = if list.iter().all(Battery::all_passed) { 0 } else { 3 };
    let passed: usize = list.iter().map(|b| b.passed).sum();
    let total: usize = list.iter().map(|b| b.total).sum();
    Outcome { output: Output::Record(json!({ "passed": passed, "total": total, "batteries": to_value(&list) })), code }
}

fn selftest_module(cmd: &Command) -> Module {
    match cmd {
        Command::Factor { .. } | Command::LuRotation { .. } | Command::ChirpDesign { .. } | Command::WindowDesign { .. } => {
            Module::LatticeFactor
        }
        Command::FrftCheck { .. } => Module::Frft,
        Command::ZakEval { .. } | Command::ZakZeros { .. } | Command::ZakHeatmap { .. } | Command::Theta { .. } => Module::Zak,
        Command::FrameEstimate { .. }
        | Command::FrameCertify { .. }
        | Command::Canonicalize { .. }
        | Command::SweepDet { .. } => Module::FrameBounds,
        Command::Selftest { .. } => Module::WindowAlgebra,
    }
}

fn wants_selftest(cmd: &Command) -> bool {
    match cmd {
        Command::Factor { st, .. }
        | Command::LuRotation { st, .. }
        | Command::ChirpDesign { st, .. }
        | Command::WindowDesign { st, .. }
        | Command::FrftCheck { st, .. }
        | Command::ZakEval { st, .. }
        | Command::ZakZeros { st, .. }
        | Command::ZakHeatmap { st, .. }
        | Command::Theta { st, .. }
        | Command::FrameEstimate { st, .. }
        | Command::FrameCertify { st, .. }
        | Command::Canonicalize { st, .. }
        | Command::SweepDet { st, .. }
        | Command::Selftest { st, .. } => st.selftest,
    }
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::Domain(format!("--{name} is required")))
}

fn sweep_rows(rows: &[SweepRow]) -> Vec<Value> {
    rows.iter()
        .map(|r| {
            let (a, b, ratio) = match &r.estimate {
                Some(e) => (json!(e.a_est), json!(e.b_est), json!(e.ratio())),
                None => (Value::Null, Value::Null, Value::Null),
            };
            let mut m = Map::new();
            m.insert("det".into(), json!(r.det));
            m.insert("A_est".into(), a);
            m.insert("B_est".into(), b);
            m.insert("ratio".into(), ratio);
            m.insert("certified".into(), json!(r.status.label()));
            Value::Object(m)
        })
        .collect()
}

fn execute(cmd: &Command) -> Result<Outcome, Error> {
    if let Command::Selftest { module, .. } = cmd {
        return Ok(match module {
            Some(m) => batteries(vec![selftest::run((*m).into())]),
            None => batteries(selftest::run_all()),
        });
    }
    if wants_selftest(cmd) {
        return Ok(batteries(vec![selftest::run(selftest_module(cmd))]));
    }
    let out = match cmd {
        Command::Factor { matrix, .. } => {
            let q = required(*matrix, "matrix")?;
            let f = factor_qr(&q)?;
            let mut v = to_value(&f);
            v["reconstruction_error"] = json!(f.reconstruct().max_abs_diff(&q));
            Output::Record(v)
        }
        Command::LuRotation { lambda, .. } => Output::Record(to_value(&factor_lu_rotation(required(*lambda, "lambda")?)?)),
        Command::ChirpDesign { lambda, .. } => {
            let d = chirp_design(required(*lambda, "lambda")?)?;
            Output::Record(json!({
                "lambda": d.lambda, "lambda_prime": d.lambda_prime, "gamma": d.gamma,
                "u": d.u, "v": d.v, "r": d.r, "s": complex(d.s), "atom": atom_value(&d.atom()),
            }))
        }
        Command::WindowDesign { r, u, .. } => {
            let (r, u) = (required(*r, "r")?, required(*u, "u")?);
            let w = window_design(r, u)?;
            Output::Record(json!({
                "lambda": w.design.lambda, "gamma": w.design.gamma, "dilation": w.dilation,
                "atom": atom_value(&w.atom), "residual": w.residual(r, u),
            }))
        }
        Command::FrftCheck { theta, nodes, half_width, .. } => {
            let phi = GaussianAtom::gaussian();
            let s = SampledSignal::symmetric(|x| phi.evaluate(x), *half_width, *nodes)?;
            let numeric = frft_numeric(&s, *theta)?;
            let exact = frft_atom(&phi, *theta);
            Output::Record(json!({
                "theta": theta, "nodes": nodes, "half_width": half_width,
                "l2_error": numeric.l2_distance_to(|x| exact.evaluate(x)),
                "norm_drift": (numeric.l2_norm() - s.l2_norm()).abs(),
                "atom_fixed_point_deviation": exact.relative_deviation(&phi),
            }))
        }
        Command::ZakEval { lambda, gamma, t, omega, .. } => {
            let theta = zak_theta(*lambda, *gamma, *t, *omega)?;
            let g = GaussianAtom::chirped_gaussian(*lambda, gamma * gamma)?;
            let direct = zak_direct(&g, *t, *omega, 40)?;
            Output::Record(json!({
                "lambda": lambda, "gamma": gamma, "t": t, "omega": omega,
                "theta_route": complex(theta), "direct_route": complex(direct.value),
                "direct_tail_bound": direct.tail_bound, "difference": (theta - direct.value).norm(),
            }))
        }
        Command::ZakZeros { lambda, gamma, n, .. } => {
            let c = find_zero(*lambda, *gamma, *n)?;
            let mut v = to_value(&c);
            v["simple"] = json!(c.is_simple());
            Output::Record(v)
        }
        Command::ZakHeatmap { lambda, gamma, n, .. } => {
            let grid = zak_grid(*lambda, *gamma, *n)?;
            let zero = find_zero(*lambda, *gamma, (*n).max(64)).ok().map(|c| (c.t, c.omega));
            Output::Heatmap { grid, zero }
        }
        Command::Theta { z_re, z_im, q_re, q_im, terms, .. } => {
            let p = ThetaParams::new(C64::new(*z_re, *z_im), C64::new(*q_re, *q_im))?;
            let s = theta_eval(&p, *terms, ThetaMode::Series)?;
            let pr = theta_eval(&p, *terms, ThetaMode::Product)?;
            Output::Record(json!({
                "z": complex(p.z()), "q": complex(p.q()), "terms": terms,
                "series": complex(s.value), "series_tail_bound": s.tail_bound,
                "product": complex(pr.value), "product_tail_bound": pr.tail_bound,
                "difference": (s.value - pr.value).norm(),
            }))
        }
        Command::FrameEstimate { gamma, chirp, matrix, res, .. } => {
            let window = GaussianAtom::chirped_gaussian(*chirp, gamma * gamma)?;
            let e = estimate_bounds(&LatticeSystem::new(window, *matrix)?, res.resolution())?;
            let mut v = to_value(&e);
            v["ratio"] = json!(e.ratio());
            v["det"] = json!(matrix.det());
            Output::Record(v)
        }
        Command::FrameCertify { alpha, beta, lambda, terms, .. } => {
            let window = GaussianAtom::chirped_gaussian(*lambda, 1.0)?;
            let c = janssen_certify(&window, *alpha, *beta, *terms)?;
            let mut v = to_value(&c);
            v["alpha"] = json!(alpha);
            v["beta"] = json!(beta);
            v["lambda"] = json!(lambda);
            Output::Record(v)
        }
        Command::Canonicalize { gamma, matrix, .. } => {
            let q = required(*matrix, "matrix")?;
            let c = canonicalize(*gamma, &q)?;
            Output::Record(json!({
                "window": atom_value(&c.window), "lambda": c.factors.lambda, "theta": c.factors.theta,
                "alpha": c.alpha, "beta": c.beta, "scale": c.scale, "flipped": c.flipped,
                "abs_det": q.det().abs(),
            }))
        }
        Command::SweepDet { gamma, shape, dets, res, .. } => {
            Output::Table(sweep_rows(&sweep_det(*gamma, shape, dets, res.resolution())?))
        }
        Command::Selftest { .. } => unreachable!("handled above"),
    };
    Ok(out.into())
}

// Floats as 17 significant digits so repeated runs are byte-identical.
struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }
}

fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_json(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits);
    v.serialize(&mut ser).expect("in-memory write");
    buf.push(b'\n');
    String::from_utf8(buf).expect("json is UTF-8")
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Number(n) => {
            let s = match (n.as_i64(), n.as_u64(), n.as_f64()) {
                (Some(i), _, _) if !n.is_f64() => i.to_string(),
                (_, Some(u), _) if !n.is_f64() => u.to_string(),
                (_, _, Some(f)) => format_float(f),
                _ => n.to_string(),
            };
            out.push((prefix.to_string(), s));
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::String(s) => out.push((prefix.to_string(), csv_field(s))),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(rows: &[Value]) -> String {
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let mut cells = Vec::new();
        flatten("", row, &mut cells);
        if i == 0 {
            out.push_str(&cells.iter().map(|(k, _)| csv_field(k)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out.push_str(&cells.iter().map(|(_, v)| v.as_str()).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

pub const SVG_SIZE: f64 = 512.0;

/// Grayscale heatmap of `-log10(|Z| + 1e-16)` clipped to `[0, 12]`; zeros are dark.
pub fn render_svg(grid: &ZakGrid, zero: Option<(f64, f64)>) -> String {
    let n = grid.n;
    let cell = SVG_SIZE / n as f64;
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"512\" height=\"512\" viewBox=\"0 0 512 512\" shape-rendering=\"crispEdges\">\n",
    );
    for j in 0..n {
        // omega increases upwards
        let y = SVG_SIZE - (j + 1) as f64 * cell;
        for i in 0..n {
            let depth = (-(grid.get(i, j) + 1e-16).log10()).clamp(0.0, 12.0);
            let level = (255.0 * (1.0 - depth / 12.0)).round() as u8;
            s.push_str(&format!(
                "<rect x=\"{:.4}\" y=\"{:.4}\" width=\"{:.4}\" height=\"{:.4}\" fill=\"rgb({level},{level},{level})\"/>\n",
                i as f64 * cell,
                y,
                cell,
                cell
            ));
        }
    }
    if let Some((t, w)) = zero {
        s.push_str(&format!(
            "<circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"6\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n",
            t * SVG_SIZE,
            SVG_SIZE - w * SVG_SIZE
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn render(out: &Output, format: Format) -> Result<String, Error> {
    match (out, format) {
        (Output::Record(v), Format::Json) => Ok(render_json(v)),
        (Output::Table(rows), Format::Json) => Ok(render_json(&Value::Array(rows.clone()))),
        (Output::Record(v), Format::Csv) => Ok(render_csv(std::slice::from_ref(v))),
        (Output::Table(rows), Format::Csv) => Ok(render_csv(rows)),
        (Output::Heatmap { grid, zero }, Format::Svg) => Ok(render_svg(grid, *zero)),
        (Output::Heatmap { grid, zero }, Format::Json) => {
            Ok(render_json(&json!({ "n": grid.n, "values": grid.values, "zero": zero })))
        }
        (Output::Heatmap { grid, .. }, Format::Csv) => {
            let rows: Vec<Value> = (0..grid.n * grid.n)
                .map(|k| json!({ "t": (k % grid.n) as f64 / grid.n as f64, "omega": (k / grid.n) as f64 / grid.n as f64, "abs_z": grid.values[k] }))
                .collect();
            Ok(render_csv(&rows))
        }
        (_, Format::Svg) => Err(Error::Domain("svg output is only available for zak-heatmap".into())),
    }
}

/// Turns a key=value config file into argument tokens.
pub fn config_tokens(text: &str) -> Result<Vec<OsString>, Error> {
    let mut command = None;
    let mut rest = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Domain(format!("config line {}: expected key=value", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "command" {
            command = Some(value.to_string());
            continue;
        }
        match value {
            "true" => rest.push(format!("--{key}")),
            "false" => {}
            _ => {
                rest.push(format!("--{key}"));
                rest.push(value.to_string());
            }
        }
    }
    let command = command.ok_or_else(|| Error::Domain("config file has no command key".into()))?;
    Ok(std::iter::once(command).chain(rest).map(OsString::from).collect())
}

fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, Error> {
    let mut out = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    if let Some(prog) = it.next() {
        out.push(prog);
    }
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            config = Some(it.next().ok_or_else(|| Error::Domain("--config needs a path".into()))?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(OsString::from(p));
        } else {
            out.push(a);
        }
    }
    let Some(path) = config else { return Ok(out) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", PathBuf::from(&path).display())))?;
    let mut tokens = config_tokens(&text)?;
    let prog = out.remove(0);
    tokens.extend(out);
    tokens.insert(0, prog);
    Ok(tokens)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Domain(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // A pool already built (repeated in-process runs) keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one invocation; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let fail = |stderr: &mut dyn Write, e: &Error| {
        let _ = writeln!(stderr, "chirpframe: {e}");
        e.exit_code()
    };
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => return fail(stderr, &e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(rendered.as_bytes()) } else { stderr.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        return fail(stderr, &e);
    }
    if let Command::ZakHeatmap { gamma, .. } | Command::ZakZeros { gamma, .. } | Command::ZakEval { gamma, .. } = &cli.command {
        if *gamma > 0.0 && *gamma < 0.1 {
            let _ = writeln!(stderr, "chirpframe: warning: gamma < 0.1 puts q near the unit circle; theta sums will be slow");
        }
    }
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(e) => return fail(stderr, &e),
    };
    let default = if matches!(outcome.output, Output::Heatmap { .. }) { Format::Svg } else { Format::Json };
    let text = match render(&outcome.output, cli.format.unwrap_or(default)) {
        Ok(t) => t,
        Err(e) => return fail(stderr, &e),
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => stdout.write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "chirpframe: cannot write output: {e}");
        return 2;
    }
    outcome.code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("chirpframe").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn field(json: &str, key: &str) -> f64 {
        let v: Value = serde_json::from_str(json).unwrap();
        v[key].as_f64().unwrap()
    }

    #[test]
    fn factor_shear() {
        let (code, out, _) = run_str(&["factor", "--matrix", "1,1,0,1"]);
        assert_eq!(code, 0);
        assert!(field(&out, "theta").abs() < 1e-15);
        assert!((field(&out, "lambda") - 1.0).abs() < 1e-15);
        assert!((field(&out, "alpha") - 1.0).abs() < 1e-15);
        assert!((field(&out, "beta") - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_matrix_entries_parse() {
        let (code, out, _) = run_str(&["factor", "--matrix", "-1,0.5,-0.25,-1"]);
        assert_eq!(code, 0, "{out}");
    }

    #[test]
    fn window_design_round_trip() {
        let (code, out, _) = run_str(&["window-design", "--r", "0.882352941", "--u", "0.470588235"]);
        assert_eq!(code, 0);
        assert!((field(&out, "lambda") - 1.0).abs() < 1e-6);
        assert!((field(&out, "dilation") - 1.0).abs() < 1e-6);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_str(&["factor", "--matrix", "1,2,2,4"]).0, 2);
        assert_eq!(run_str(&["factor", "--matrix", "1,2,3"]).0, 2);
        assert_eq!(run_str(&["no-such-command"]).0, 2);
        assert_eq!(run_str(&["zak-zeros", "--n", "16"]).0, 2);
        assert_eq!(run_str(&["factor", "--matrix", "1,0,0,1", "--format", "svg"]).0, 2);
        assert_eq!(run_str(&["--help"]).0, 0);
    }

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(render_json(&json!({"x": 0.5})), "{\"x\":5.0000000000000000e-1}\n");
        assert_eq!(render_json(&json!({"n": 3})), "{\"n\":3}\n");
    }

    #[test]
    fn csv_flattens_records() {
        let csv = render_csv(&[json!({"a": 1.0, "b": {"c": true, "d": "x,y"}})]);
        assert_eq!(csv, "a,b.c,b.d\n1.0000000000000000e0,true,\"x,y\"\n");
    }

    #[test]
    fn config_file_tokens() {
        let toks = config_tokens("# zeros\ncommand = zak-zeros\nlambda=-2\ngamma = 0.5\nselftest=false\n").unwrap();
        let toks: Vec<String> = toks.into_iter().map(|t| t.into_string().unwrap()).collect();
        assert_eq!(toks, ["zak-zeros", "--lambda", "-2", "--gamma", "0.5"]);
        assert!(config_tokens("lambda=1").is_err());
        assert!(config_tokens("command=factor\nnonsense").is_err());
    }

    #[test]
    fn svg_layout() {
        let grid = ZakGrid { n: 2, values: vec![1.0, 1e-3, 1e-20, 1.0] };
        let svg = render_svg(&grid, Some((0.5, 0.5)));
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<rect").count(), 4);
        // (i=0, j=1) sits in the upper-left cell and is fully dark.
        assert!(svg.contains("<rect x=\"0.0000\" y=\"0.0000\" width=\"256.0000\" height=\"256.0000\" fill=\"rgb(0,0,0)\"/>"));
        assert!(svg.contains("cx=\"256.0000\" cy=\"256.0000\""));
    }

    #[test]
    fn selftest_flag_runs_battery() {
        let (code, out, _) = run_str(&["chirp-design", "--selftest"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["batteries"][0]["module"], "lattice_factor");
        assert_eq!(v["passed"], v["total"]);
    }
}
