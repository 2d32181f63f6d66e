//! Spectral zeta functions and the zeta-regularised determinant.
//!
//! The Mellin transform of the heat trace is split at `t = 1`:
//!
//! ```text
//! ζ_B(s) = Γ(s)^{-1} ( Σ_j b_j / (j/m + s) + ∫_1^∞ t^{s-1} tr e^{-tB} dt + ∫_0^1 t^{s-1} F(t) dt )
//! ζ_B′(0) = γ b₀′ + Σ_{j≠0} m b_j / j + ∫_0^1 F(t) dt/t + ∫_1^∞ tr e^{-tB} dt/t
//! ```
//!
//! Every integral here uses Gauss–Kronrod, never the E1 series or the
//! tanh-sinh rule of [`crate::regdet`], so [`verify_bridge`] compares two
//! independent computations.

use crate::error::{domain, Error, Result};
use crate::heat_expansion::HeatExpansion;
use crate::quad::{gauss_kronrod, QuadResult};
use crate::regdet::{log_Det_reg, remainder_mellin, Estimate, Rule};
use crate::special::{gamma_fn, hurwitz_zeta, hurwitz_zeta_prime0, Tolerance, EULER_GAMMA};
use crate::spectra::{EigenFamily, Lattice, LatticeSide, Spectrum};
use crate::sum::CompensatedSum;
use serde::Serialize;
use std::cell::RefCell;

pub const S_MIN: f64 = -2.0;
pub const S_MAX: f64 = 30.0;
pub const POLE_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ZetaRoute {
    #[serde(rename = "mellin-split")]
    MellinSplit,
    #[serde(rename = "closed-form-oracle")]
    ClosedFormOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaEvaluation {
    pub s: f64,
    pub value: f64,
    pub route: ZetaRoute,
    pub error_estimate: f64,
}

fn check_primed(spec: &Spectrum, exp: &HeatExpansion) -> Result<()> {
    if !exp.primed() && spec.kernel_dim() > 0 {
        return Err(domain(
            "zeta functions need the zero modes removed; build the expansion primed",
        ));
    }
    if exp.kernel_dim() != spec.kernel_dim() {
        return Err(domain(
            "expansion and spectrum disagree on the number of zero modes",
        ));
    }
    Ok(())
}

/// `∫_1^∞ f(t) dt` for `f` decaying like `t^{s-1} e^{-λ_min t}`, on doubling
/// panels. The tail past `T` is bounded by `2 |f(T)| / λ_min` once
/// `t^{s-1} e^{-λ_min t / 2}` is decreasing there.
fn far_integral<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lambda_min: f64,
    s: f64,
) -> Result<Estimate> {
    let failure = RefCell::new(None);
    let mut g = |t: f64| match f(t) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let t_monotone = (2.0 * (s - 1.0) / lambda_min).max(1.0);
    let t_decay = 45.0 / lambda_min;
    let mut total = QuadResult::zero();
    let mut a = 1.0;
    loop {
        let b = 2.0 * a;
        let panel = gauss_kronrod(&mut g, a, b, 1e-16, 1e-13);
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        total = total + panel?;
        if b >= t_monotone && b >= t_decay {
            let tail = 2.0 * g(b).abs() / lambda_min;
            if tail <= 1e-16 * total.value.abs().max(1e-300) || b > 1e6 {
                return Ok(Estimate::new(total.value, total.error + tail));
            }
        }
        a = b;
    }
}

/// `ζ_B(s)` through the Mellin split.
pub fn zeta_value(spec: &Spectrum, exp: &HeatExpansion, s: f64) -> Result<ZetaEvaluation> {
    check_primed(spec, exp)?;
    if !(S_MIN..=S_MAX).contains(&s) {
        return Err(domain(format!("s = {s} outside [{S_MIN}, {S_MAX}]")));
    }
    if s.abs() <= POLE_RADIUS {
        // 1/Γ(s) ~ s cancels the b₀/s pole: ζ(0) = b₀′.
        return Ok(ZetaEvaluation {
            s,
            value: zeta_at_zero(exp),
            route: ZetaRoute::MellinSplit,
            error_estimate: 0.0,
        });
    }
    for k in [1.0, 2.0] {
        if (s + k).abs() <= POLE_RADIUS {
            return Err(Error::Pole {
                s,
                reason: format!("Γ has a pole at s = -{k}"),
            });
        }
    }
    let mf = exp.m() as f64;
    let mut head = CompensatedSum::new();
    for (&j, &b) in &exp.coeffs().0 {
        if b == 0.0 {
            continue;
        }
        let denom = j as f64 / mf + s;
        if denom.abs() <= POLE_RADIUS {
            return Err(Error::Pole {
                s,
                reason: format!(
                    "heat coefficient b_{j} = {b} produces a pole at s = {}",
                    -(j as f64) / mf
                ),
            });
        }
        head.add(b / denom);
    }
    let head = head.total();
    let near = remainder_mellin(spec, exp, s, false, Rule::GaussKronrod)?;
    let tol = Tolerance::default();
    let far = far_integral(
        |t| Ok(t.powf(s - 1.0) * spec.heat_trace(t, tol, !exp.primed())?),
        spec.min_positive_eigenvalue(),
        s,
    )?;
    let gamma = gamma_fn(s)?;
    let bracket = head + near.value + far.value;
    let rounding = 1e-15 * (head.abs() + near.value.abs() + far.value.abs());
    Ok(ZetaEvaluation {
        s,
        value: bracket / gamma,
        route: ZetaRoute::MellinSplit,
        error_estimate: (near.error + far.error + rounding) / gamma.abs(),
    })
}

/// `ζ_B(0) = b₀′`.
pub fn zeta_at_zero(exp: &HeatExpansion) -> f64 {
    exp.b0_primed()
}

/// `ζ_B′(0)` from its closed form.
pub fn zeta_prime0(spec: &Spectrum, exp: &HeatExpansion) -> Result<Estimate> {
    check_primed(spec, exp)?;
    let mf = exp.m() as f64;
    let counter: f64 = exp
        .coeffs()
        .0
        .iter()
        .filter(|(&j, _)| j != 0)
        .map(|(&j, &b)| mf * b / j as f64)
        .sum();
    let near = remainder_mellin(spec, exp, 0.0, false, Rule::GaussKronrod)?;
    let tol = Tolerance::default();
    let far = far_integral(
        |t| Ok(spec.heat_trace(t, tol, !exp.primed())? / t),
        spec.min_positive_eigenvalue(),
        0.0,
    )?;
    let value = EULER_GAMMA * exp.b0_primed() + counter + near.value + far.value;
    Ok(Estimate::new(value, near.error + far.error))
}

/// Variation `δ ζ_B′(0)` along the direction carried by the eigenvalue
/// derivatives: the closed form of [`zeta_prime0`] with every ingredient
/// replaced by its variation, `δ tr e^{-tB} = -t Σ δλ e^{-tλ}`.
pub fn zeta_prime0_variation(spec: &Spectrum, exp: &HeatExpansion) -> Result<Estimate> {
    check_primed(spec, exp)?;
    let mf = exp.m() as f64;
    let counter: f64 = exp
        .coeff_derivatives()
        .0
        .iter()
        .filter(|(&j, _)| j != 0)
        .map(|(&j, &b)| mf * b / j as f64)
        .sum();
    let near = remainder_mellin(spec, exp, 0.0, true, Rule::GaussKronrod)?;
    let tol = Tolerance::default();
    let far = far_integral(
        |t| Ok(spec.heat_trace_variation(t, tol)? / t),
        spec.min_positive_eigenvalue(),
        1.0,
    )?;
    let value = EULER_GAMMA * exp.coeff_derivative(0) + counter + near.value + far.value;
    Ok(Estimate::new(value, near.error + far.error))
}

/// Both sides of `log Det_reg = -ζ′(0) = -γ b₀′ + log det_reg`.
#[derive(Debug, Clone, Serialize)]
pub struct BridgeReport {
    /// `-ζ_B′(0)`.
    pub zeta_route: f64,
    pub zeta_route_error: f64,
    /// `-γ b₀′ + log det_reg`.
    pub heat_route: f64,
    pub heat_route_error: f64,
    pub b0_primed: f64,
    pub discrepancy: f64,
    pub budget: f64,
    pub passed: bool,
}

/// Evaluate both routes and compare them. The budget is the sum of the
/// two error estimates plus a rounding allowance.
pub fn verify_bridge(spec: &Spectrum, exp: &HeatExpansion) -> Result<BridgeReport> {
    let zeta = -zeta_prime0(spec, exp)?;
    let heat = log_Det_reg(spec, exp)?;
    let discrepancy = (zeta.value - heat.value).abs();
    let rounding = 1e-13 * (1.0 + zeta.value.abs() + heat.value.abs());
    let budget = zeta.error + heat.error + rounding;
    Ok(BridgeReport {
        zeta_route: zeta.value,
        zeta_route_error: zeta.error,
        heat_route: heat.value,
        heat_route_error: heat.error,
        b0_primed: exp.b0_primed(),
        discrepancy,
        budget,
        passed: discrepancy <= budget,
    })
}

/// One side of a lattice tail `Σ_{n>N} (c n + θ)^{-2s}` by the midpoint
/// Euler–Maclaurin formula.
fn lattice_tail(c: f64, theta: f64, n: i64, s: f64) -> f64 {
    let x = c * (n as f64 + 0.5) + theta;
    let p = 2.0 * s;
    let integral = x.powf(1.0 - p) / (c * (p - 1.0));
    let d1 = -p * c * x.powf(-p - 1.0);
    let d3 = -p * (p + 1.0) * (p + 2.0) * c.powi(3) * x.powf(-p - 3.0);
    integral - d1 / 24.0 + 7.0 * d3 / 5760.0
}

/// Direct summation `Σ′ mult · λ^{-s}`; requires `s > 1/2` when a lattice
/// family is present.
pub fn dirichlet_series(spec: &Spectrum, s: f64) -> Result<f64> {
    const N: i64 = 4000;
    if spec.has_lattice() && s <= 0.5 {
        return Err(domain(format!(
            "lattice Dirichlet series diverges at s = {s}"
        )));
    }
    let mut acc = CompensatedSum::new();
    for family in spec.families() {
        match family {
            EigenFamily::Explicit(modes) => {
                for m in modes {
                    acc.add(m.multiplicity as f64 * m.eigenvalue.powf(-s));
                }
            }
            EigenFamily::Lattice(l) => {
                let n = N.max((l.shift.abs() / l.scale).ceil() as i64 + 2);
                let head = l.sum_roots(n, |u| u.abs().powf(-2.0 * s));
                let mut tail = lattice_tail(l.scale, l.shift, n, s);
                if l.side == LatticeSide::Full {
                    tail += lattice_tail(l.scale, -l.shift, n, s);
                }
                acc.add(l.multiplicity as f64 * (head + tail));
            }
        }
    }
    Ok(acc.total())
}

/// Hurwitz arguments `q` with `Σ′ (c n + θ)^{-2s} = c^{-2s} Σ_q ζ_H(2s, q)`.
fn hurwitz_parameters(l: &Lattice) -> Result<Vec<f64>> {
    let ratio = l.shift / l.scale;
    match l.side {
        LatticeSide::Positive => {
            let q = 1.0 + ratio;
            if q > 0.0 {
                Ok(vec![q])
            } else {
                Err(Error::Unsupported(format!(
                    "one-sided lattice with shift/scale = {ratio} ≤ -1 has no Hurwitz form"
                )))
            }
        }
        LatticeSide::Full => {
            let frac = ratio - ratio.floor();
            if frac == 0.0 {
                Ok(vec![1.0, 1.0])
            } else {
                Ok(vec![frac, 1.0 - frac])
            }
        }
    }
}

/// `ζ_B(s)` from Hurwitz zeta closed forms: an oracle independent of the
/// heat trace.
pub fn zeta_closed_form(spec: &Spectrum, s: f64) -> Result<ZetaEvaluation> {
    let mut acc = CompensatedSum::new();
    for family in spec.families() {
        match family {
            EigenFamily::Explicit(modes) => {
                for m in modes {
                    acc.add(m.multiplicity as f64 * m.eigenvalue.powf(-s));
                }
            }
            EigenFamily::Lattice(l) => {
                let scale = l.scale.powf(-2.0 * s);
                for q in hurwitz_parameters(l)? {
                    acc.add(l.multiplicity as f64 * scale * hurwitz_zeta(2.0 * s, q)?);
                }
            }
        }
    }
    let value = acc.total();
    Ok(ZetaEvaluation {
        s,
        value,
        route: ZetaRoute::ClosedFormOracle,
        error_estimate: 1e-13 * value.abs().max(1.0),
    })
}

/// `ζ_B′(0)` from `ζ_H(0, q) = ½ - q` and `∂_s ζ_H(0, q) = ln Γ(q) - ½ ln 2π`.
pub fn zeta_prime0_closed_form(spec: &Spectrum) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for family in spec.families() {
        match family {
            EigenFamily::Explicit(modes) => {
                for m in modes {
                    acc.add(-(m.multiplicity as f64) * m.eigenvalue.ln());
                }
            }
            EigenFamily::Lattice(l) => {
                let ln_c = l.scale.ln();
                for q in hurwitz_parameters(l)? {
                    let d = -2.0 * ln_c * (0.5 - q) + 2.0 * hurwitz_zeta_prime0(q)?;
                    acc.add(l.multiplicity as f64 * d);
                }
            }
        }
    }
    Ok(acc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat_expansion::{analytic_expansion, finite_expansion};
    use crate::spectra::{finite_spectrum, lattice_family};
    use std::f64::consts::{PI, TAU};

    fn riemann() -> (Spectrum, HeatExpansion) {
        let s = lattice_family(TAU, 0.0, LatticeSide::Positive, 1, 0.0).unwrap();
        let e = analytic_expansion(&s, true).unwrap();
        (s, e)
    }

    #[test]
    fn riemann_values() {
        let (s, e) = riemann();
        let z = zeta_value(&s, &e, 2.0).unwrap();
        let expected = PI.powi(4) / 90.0 / TAU.powi(4);
        assert!((z.value - expected).abs() < 1e-14, "{z:?}");
        assert!(zeta_prime0(&s, &e).unwrap().value.abs() < 1e-9);
        assert_eq!(zeta_value(&s, &e, 0.0).unwrap().value, -0.5);
        assert!(matches!(zeta_value(&s, &e, 0.5), Err(Error::Pole { .. })));
        assert!(matches!(zeta_value(&s, &e, -1.0), Err(Error::Pole { .. })));
        assert!(zeta_value(&s, &e, 31.0).is_err());
    }

    #[test]
    fn finite_values() {
        let s = finite_spectrum(&[(2.0, 1, 0.0), (3.0, 1, 0.0)]).unwrap();
        let e = finite_expansion(&s, true).unwrap();
        let z = zeta_value(&s, &e, 1.0).unwrap();
        assert!((z.value - 5.0 / 6.0).abs() < 1e-12, "{z:?}");
        assert!((zeta_prime0(&s, &e).unwrap().value + 6f64.ln()).abs() < 1e-10);
        let z = zeta_value(&s, &e, -1.5).unwrap();
        assert!(
            (z.value - (2f64.powf(1.5) + 3f64.powf(1.5))).abs() < 1e-9,
            "{z:?}"
        );
    }

    #[test]
    fn twisted_lattice_against_hurwitz() {
        let s = lattice_family(TAU, PI, LatticeSide::Full, 1, 0.0).unwrap();
        let e = analytic_expansion(&s, true).unwrap();
        let z = zeta_value(&s, &e, 0.3).unwrap();
        let oracle = zeta_closed_form(&s, 0.3).unwrap();
        assert!((z.value - oracle.value).abs() < 1e-9, "{z:?} vs {oracle:?}");
        let s = lattice_family(TAU, PI / 3.0, LatticeSide::Full, 1, 0.0).unwrap();
        let e = analytic_expansion(&s, true).unwrap();
        assert!(zeta_prime0(&s, &e).unwrap().value.abs() < 1e-9);
        assert!(zeta_prime0_closed_form(&s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dirichlet_region() {
        let (s, e) = riemann();
        for x in [2.0, 3.0, 5.0] {
            let direct = dirichlet_series(&s, x).unwrap();
            let mellin = zeta_value(&s, &e, x).unwrap().value;
            assert!((direct - mellin).abs() <= 1e-10 * direct.abs(), "s={x}");
        }
    }

    #[test]
    fn bridge_on_shifted_one_sided_lattice() {
        let s = lattice_family(TAU, PI, LatticeSide::Positive, 1, 0.0).unwrap();
        let e = analytic_expansion(&s, true).unwrap();
        let r = verify_bridge(&s, &e).unwrap();
        assert!(r.discrepancy < 1e-9, "{r:?}");
        assert_eq!(r.b0_primed, -1.0);
    }
}
