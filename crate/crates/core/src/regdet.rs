//! Cutoff and heat-kernel regularised determinants, and regularised limits
//! of trace families.
//!
//! `log det_ε B = -Σ mult · E1(ε λ)`, and with the expansion of the heat
//! trace
//!
//! ```text
//! log det_reg B = -Σ_{j≠0} m b_j / j - ∫_1^∞ tr e^{-tB} dt/t - ∫_0^1 F(t) dt/t
//! log Det_reg B = -γ b₀′ + log det_reg B
//! ```
//!
//! where `b₀′` leaves zero modes out.

use crate::error::{domain, Error, Result};
use crate::heat_expansion::{HeatExpansion, IndexedMap};
use crate::quad::{gauss_kronrod, tanh_sinh, QuadResult};
use crate::special::{exp_integral_e1, Tolerance, EULER_GAMMA};
use crate::spectra::Spectrum;
use serde::Serialize;
use std::cell::RefCell;

/// Certified bound on the omitted part of every eigenvalue series.
pub const SERIES_TAIL_TOL: f64 = 1e-13;

/// A value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

impl std::ops::Neg for Estimate {
    type Output = Estimate;
    fn neg(self) -> Estimate {
        Estimate::new(-self.value, self.error)
    }
}

impl From<QuadResult> for Estimate {
    fn from(q: QuadResult) -> Self {
        Estimate::new(q.value, q.error)
    }
}

fn check_kernel(spec: &Spectrum, primed: bool) -> Result<()> {
    if !primed && spec.kernel_dim() > 0 {
        return Err(domain(format!(
            "operator has {} zero modes: log h_ε(0) diverges, request the primed quantity",
            spec.kernel_dim()
        )));
    }
    Ok(())
}

/// `log det_ε B = -Σ′ mult · E1(ε λ_n)`, zero modes excluded when `primed`.
pub fn log_det_eps(spec: &Spectrum, eps: f64, primed: bool) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(domain(format!("ε must be positive, got {eps}")));
    }
    check_kernel(spec, primed)?;
    // E1(x) ≤ e^{-x}/x
    let total = spec.mode_sum(
        eps,
        SERIES_TAIL_TOL,
        |u| 1.0 / (eps * u * u),
        |lambda, _| exp_integral_e1(eps * lambda).unwrap_or(f64::NAN),
    );
    if !total.is_finite() {
        return Err(Error::Numeric(format!("non-finite log det_ε at ε={eps}")));
    }
    Ok(-total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rule {
    TanhSinh,
    GaussKronrod,
}

/// Panel edges `t₀ < 10^k < ... < 1`.
fn decade_panels(t0: f64) -> Vec<f64> {
    let mut edges = vec![t0];
    let mut k = t0.log10().floor() as i32 + 1;
    while k < 0 {
        let edge = 10f64.powi(k);
        if edge > t0 * 1.5 {
            edges.push(edge);
        }
        k += 1;
    }
    edges.push(1.0);
    edges
}

/// `∫_0^1 t^{s-1} F(t) dt`, or the same for `δF = δ tr e^{-tB} - Σ δb_j t^{j/m}`
/// when `variation` is set.
///
/// Below `t₀` the remainder series is integrated term by term; fitted
/// expansions integrate down to `1e-6` and bound the rest by `C t`.
pub(crate) fn remainder_mellin(
    spec: &Spectrum,
    exp: &HeatExpansion,
    s: f64,
    variation: bool,
    rule: Rule,
) -> Result<Estimate> {
    let tol = Tolerance::default();
    let (t0, head) = match exp.remainder_mellin_head(s, exp.series_cutoff()) {
        Some([value, dvalue]) => {
            let (v, e) = if variation { dvalue } else { value };
            (exp.series_cutoff(), Estimate::new(v, e))
        }
        None => {
            if variation {
                return Err(Error::Unsupported(
                    "variations need an analytic expansion".into(),
                ));
            }
            if s <= -1.0 {
                return Err(Error::Unsupported(format!(
                    "fitted expansions carry no remainder series; s = {s} needs one"
                )));
            }
            let t0: f64 = 1e-6;
            let bound = exp.remainder_bound() * t0.powf(s + 1.0) / (s + 1.0);
            (t0, Estimate::new(0.0, bound))
        }
    };
    let failure = RefCell::new(None);
    let mut integrand = |t: f64| -> f64 {
        let r = if variation {
            spec.heat_trace_variation(t, tol)
                .map(|v| v - exp.singular_part_variation(t))
        } else {
            spec.heat_trace(t, tol, !exp.primed())
                .map(|v| v - exp.singular_part(t))
        };
        match r {
            Ok(v) => v * t.powf(s - 1.0),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    // F is a difference of O(tr) terms; its rounding noise bounds what any
    // panel can resolve.
    let magnitude = |t: f64| -> Result<f64> {
        Ok(if variation {
            spec.heat_trace_variation(t, tol)?.abs() + exp.singular_part_variation(t).abs()
        } else {
            spec.heat_trace(t, tol, !exp.primed())?.abs() + exp.singular_part(t).abs()
        })
    };
    let power_integral = |a: f64, b: f64| {
        if s == 0.0 {
            (b / a).ln()
        } else {
            ((b.powf(s) - a.powf(s)) / s).abs()
        }
    };
    let edges = decade_panels(t0);
    let mut body = QuadResult::zero();
    for w in edges.windows(2) {
        let noise = 8.0
            * f64::EPSILON
            * magnitude(w[0])?.max(magnitude(w[1])?)
            * power_integral(w[0], w[1]);
        let abs_tol = noise.max(1e-13);
        let panel = match rule {
            Rule::TanhSinh => tanh_sinh(&mut integrand, w[0], w[1], abs_tol, 1e-12),
            Rule::GaussKronrod => gauss_kronrod(&mut integrand, w[0], w[1], abs_tol, 1e-12),
        };
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        body = body + panel?;
    }
    // Heat-trace truncation error integrated against t^{s-1}.
    let sampling = tol.abs_tol
        * if s == 0.0 {
            -t0.ln()
        } else {
            (1.0 - t0.powf(s)) / s
        };
    Ok(head + Estimate::from(body) + Estimate::new(0.0, sampling.abs()))
}

fn check_expansion(spec: &Spectrum, exp: &HeatExpansion) -> Result<()> {
    check_kernel(spec, exp.primed())?;
    if exp.kernel_dim() != spec.kernel_dim() {
        return Err(domain(format!(
            "expansion was built for {} zero modes, spectrum has {}",
            exp.kernel_dim(),
            spec.kernel_dim()
        )));
    }
    Ok(())
}

/// `-Σ_{j≠0} m b_j / j`.
fn counterterm_constant(exp: &HeatExpansion) -> f64 {
    let mf = exp.m() as f64;
    exp.coeffs()
        .0
        .iter()
        .filter(|(&j, _)| j != 0)
        .map(|(&j, &b)| -mf * b / j as f64)
        .sum()
}

/// Heat-kernel regularised `log det_reg B` from the closed form.
///
/// `∫_1^∞ tr e^{-tB} dt/t` is evaluated as `Σ mult · E1(λ)`;
/// `∫_0^1 F(t) dt/t` by tanh-sinh on decade panels.
pub fn log_det_reg(spec: &Spectrum, exp: &HeatExpansion) -> Result<Estimate> {
    check_expansion(spec, exp)?;
    let counter = counterterm_constant(exp);
    let far = -log_det_eps(spec, 1.0, true)?;
    let near = remainder_mellin(spec, exp, 0.0, false, Rule::TanhSinh)?;
    let value = counter - far - near.value;
    Ok(Estimate::new(value, near.error + SERIES_TAIL_TOL))
}

/// Zeta-type determinant through the bridge, `log Det_reg = -γ b₀′ + log det_reg`.
#[allow(non_snake_case)]
pub fn log_Det_reg(spec: &Spectrum, exp: &HeatExpansion) -> Result<Estimate> {
    let det = log_det_reg(spec, exp)?;
    Ok(Estimate::new(
        -EULER_GAMMA * exp.b0_primed() + det.value,
        det.error,
    ))
}

/// Full determinant report.
#[derive(Debug, Clone, Serialize)]
pub struct RegDetReport {
    pub eps_grid: Vec<f64>,
    pub log_det_eps: Vec<f64>,
    pub log_det_reg: f64,
    #[serde(rename = "log_Det_reg")]
    pub log_zeta_det_reg: f64,
    pub b0: f64,
    pub b0_primed: f64,
    pub kernel_dim: usize,
    pub quadrature_error: f64,
    pub counterterms: IndexedMap,
    /// `log det_ε - Σ_{j<0} m b_j/j ε^{j/m} - b₀′ ln ε - log det_reg` at `ε = 1e-2, 1e-3, 1e-4`.
    pub limit_residuals: Vec<f64>,
    pub limit_converging: bool,
}

pub const LIMIT_CHECK_EPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Evaluate every determinant quantity for `spec`.
pub fn regdet_report(
    spec: &Spectrum,
    exp: &HeatExpansion,
    eps_grid: &[f64],
) -> Result<RegDetReport> {
    check_expansion(spec, exp)?;
    let primed = exp.primed() || spec.kernel_dim() == 0;
    let log_det_eps_values = eps_grid
        .iter()
        .map(|&e| log_det_eps(spec, e, primed))
        .collect::<Result<Vec<_>>>()?;
    let det = log_det_reg(spec, exp)?;
    let counterterms = exp.counterterms();
    let mf = exp.m() as f64;
    let limit_residuals = LIMIT_CHECK_EPS
        .iter()
        .map(|&e| {
            let divergent: f64 = counterterms
                .0
                .iter()
                .map(|(&j, &c)| c * e.powf(j as f64 / mf))
                .sum();
            Ok(log_det_eps(spec, e, primed)? - divergent - exp.b0_primed() * e.ln() - det.value)
        })
        .collect::<Result<Vec<_>>>()?;
    let limit_converging = limit_residuals
        .windows(2)
        .all(|w| w[1].abs() <= w[0].abs() || w[1].abs() <= 1e-9);
    Ok(RegDetReport {
        eps_grid: eps_grid.to_vec(),
        log_det_eps: log_det_eps_values,
        log_det_reg: det.value,
        log_zeta_det_reg: -EULER_GAMMA * exp.b0_primed() + det.value,
        b0: exp.b0(),
        b0_primed: exp.b0_primed(),
        kernel_dim: spec.kernel_dim(),
        quadrature_error: det.error,
        counterterms,
        limit_residuals,
        limit_converging,
    })
}

/// Regularised limit of a trace family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitTrace {
    pub value: f64,
    pub error: f64,
    /// Counterterm-corrected samples along the ε sequence.
    pub samples: Vec<f64>,
}

pub const DEFAULT_EPS_SEQUENCE: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Neville extrapolation of the points `(x_i, y_i)` to `x = 0`.
fn extrapolate_to_zero(x: &[f64], y: &[f64]) -> f64 {
    let mut p = y.to_vec();
    let n = x.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xa, xb) = (x[i], x[i + level]);
            p[i] = (xb * p[i] - xa * p[i + 1]) / (xb - xa);
        }
    }
    p[0]
}

/// `lim_{ε→0} ( tr A_ε - Σ_{j=-J+m}^{-1} (m a_{j-m}/j) ε^{j/m} - a_{-m} ln ε )`.
///
/// `coeffs` holds `a_j` for `j ∈ {-J, ..., -1}`. The corrected samples are
/// extrapolated polynomially in `ε^{1/m}`; the error is the change caused by
/// dropping the largest ε. Growing successive differences are reported as
/// divergence.
pub fn reg_limit_trace<F>(
    mut trace_fn: F,
    coeffs: &IndexedMap,
    m: u32,
    eps_sequence: &[f64],
) -> Result<LimitTrace>
where
    F: FnMut(f64) -> Result<f64>,
{
    if m == 0 {
        return Err(domain("m must be positive"));
    }
    if eps_sequence.len() < 2 {
        return Err(domain("need at least two ε values"));
    }
    if eps_sequence.windows(2).any(|w| !(w[1] < w[0]))
        || eps_sequence.iter().any(|&e| !(e > 0.0 && e <= 1.0))
    {
        return Err(domain("ε sequence must decrease inside (0, 1]"));
    }
    if let Some((&j, _)) = coeffs.0.iter().find(|(&j, _)| j >= 0) {
        return Err(domain(format!("counterterm index {j} must be negative")));
    }
    let mi = m as i32;
    let big_j = coeffs.0.keys().map(|j| -j).max().unwrap_or(0);
    let mf = m as f64;
    let mut samples = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let mut g = trace_fn(eps)?;
        for j in (-big_j + mi)..=-1 {
            g -= mf * coeffs.get(j - mi) / j as f64 * eps.powf(j as f64 / mf);
        }
        g -= coeffs.get(-mi) * eps.ln();
        if !g.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite trace sample at ε={eps}"
            )));
        }
        samples.push(g);
    }
    let scale = samples.iter().fold(1.0f64, |a, g| a.max(g.abs()));
    let floor = 1e-13 * scale;
    let diffs: Vec<f64> = samples.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    for (k, w) in diffs.windows(2).enumerate() {
        if w[1] > w[0] * (1.0 + 1e-9) + floor {
            return Err(Error::Divergence(format!(
                "successive differences grow: |Δ{k}| = {:e}, |Δ{}| = {:e}",
                w[0],
                k + 1,
                w[1]
            )));
        }
    }
    let x: Vec<f64> = eps_sequence.iter().map(|e| e.powf(1.0 / mf)).collect();
    let value = extrapolate_to_zero(&x, &samples);
    let reduced = extrapolate_to_zero(&x[1..], &samples[1..]);
    Ok(LimitTrace {
        value,
        error: (value - reduced).abs() + floor,
        samples,
    })
}
