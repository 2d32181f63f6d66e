//! Coadjoint orbits of the based loop group through constant loops.
//!
//! At the constant loop `a = s·x` the orbit operator `τ*τ` has, for each
//! positive root `α` and `n ≥ 1`, eigenvalues `(2πn ∓ α(a))²` with
//! multiplicity 2, eigenvalue `α(a)²` with multiplicity 2 from the constant
//! loops, the Cartan levels `(2πn)²`, and an `r`-dimensional kernel. Moving
//! along `x` shifts the root lattices at speed `∓α(x)`.
//!
//! Curvature quantities follow from the spectrum: the smoothed shape
//! operator `H_X^ε` has trace `-½ Σ mult δλ/λ e^{-ελ} = -δ log vol_ε`, and
//! its regularised limit is compared with the zeta-type variation of the
//! determinant.

use crate::error::{domain, Error, Result};
use crate::heat_expansion::{exact_expansion, IndexedMap};
use crate::regdet::{log_Det_reg, log_det_eps, log_det_reg, reg_limit_trace, Estimate, LimitTrace};
use crate::special::EULER_GAMMA;
use crate::spectra::{EigenFamily, ExplicitMode, Lattice, LatticeSide, Spectrum};
use crate::sum::CompensatedSum;
use crate::zeta::zeta_prime0_variation;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Multiplicity convention for the Cartan levels `(2πn)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CartanMode {
    /// `2r` per level, the count of the real basis.
    #[default]
    #[serde(rename = "consistent-2r")]
    Consistent2r,
    /// `4r` per level.
    #[serde(rename = "paper-4r")]
    Literal4r,
}

impl CartanMode {
    fn multiplicity(self, rank: usize) -> u32 {
        match self {
            CartanMode::Consistent2r => 2 * rank as u32,
            CartanMode::Literal4r => 4 * rank as u32,
        }
    }
}

/// Root data, direction and position of a constant loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopGroupOrbitSpec {
    pub rank: usize,
    pub positive_roots: Vec<Vec<f64>>,
    pub x: Vec<f64>,
    pub s: f64,
    #[serde(default)]
    pub cartan_mode: CartanMode,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

impl LoopGroupOrbitSpec {
    pub fn new(rank: usize, positive_roots: Vec<Vec<f64>>, x: Vec<f64>, s: f64) -> Result<Self> {
        let spec = Self {
            rank,
            positive_roots,
            x,
            s,
            cartan_mode: CartanMode::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(domain("rank must be positive"));
        }
        if self.x.len() != self.rank {
            return Err(domain(format!(
                "direction x has {} components, rank is {}",
                self.x.len(),
                self.rank
            )));
        }
        if let Some(bad) = self.positive_roots.iter().find(|r| r.len() != self.rank) {
            return Err(domain(format!(
                "root {bad:?} has {} components, rank is {}",
                bad.len(),
                self.rank
            )));
        }
        let finite = self
            .positive_roots
            .iter()
            .flatten()
            .chain(&self.x)
            .chain(std::iter::once(&self.s))
            .all(|v| v.is_finite());
        if !finite {
            return Err(domain("root data, direction and position must be finite"));
        }
        Ok(())
    }

    pub fn at(&self, s: f64) -> Self {
        Self { s, ..self.clone() }
    }

    /// `dim g = r + 2|Δ⁺|`.
    pub fn dim_g(&self) -> usize {
        self.rank + 2 * self.positive_roots.len()
    }

    /// `(α(a), α(x))` per positive root.
    pub fn root_values(&self) -> Vec<(f64, f64)> {
        self.positive_roots
            .iter()
            .map(|r| {
                let ax = dot(r, &self.x);
                (self.s * ax, ax)
            })
            .collect()
    }
}

/// Spectrum of `τ*τ` at the constant loop `s·x`. With `primed` the modes of
/// the constant loops (`α(a)²` and the kernel) are dropped.
pub fn orbit_spectrum(spec: &LoopGroupOrbitSpec, primed: bool) -> Result<Spectrum> {
    spec.validate()?;
    let mut families = Vec::new();
    let mut constants = Vec::new();
    for (alpha_a, alpha_x) in spec.root_values() {
        families.push(EigenFamily::Lattice(Lattice::new(
            TAU,
            -alpha_a,
            LatticeSide::Positive,
            2,
            -alpha_x,
        )?));
        families.push(EigenFamily::Lattice(Lattice::new(
            TAU,
            alpha_a,
            LatticeSide::Positive,
            2,
            alpha_x,
        )?));
        constants.push(ExplicitMode {
            eigenvalue: alpha_a * alpha_a,
            multiplicity: 2,
            derivative: 2.0 * alpha_a * alpha_x,
        });
    }
    families.push(EigenFamily::Lattice(Lattice::new(
        TAU,
        0.0,
        LatticeSide::Positive,
        spec.cartan_mode.multiplicity(spec.rank),
        0.0,
    )?));
    if primed {
        Spectrum::new(families, 0)
    } else {
        families.push(EigenFamily::Explicit(constants));
        Spectrum::new(families, spec.rank)
    }
}

/// Eigenvalues `μ_n^ε` of `H_x̂^ε` at the zero loop, grouped by level:
/// `±α(x)/(2πn) e^{-ε(2πn)²}` per root, then `0` with multiplicity `r`.
/// Levels stop once every entry is below `1e-300`.
pub fn shape_eps_spectrum(spec: &LoopGroupOrbitSpec, eps: f64) -> Result<Vec<(f64, u32)>> {
    spec.validate()?;
    if !(eps > 0.0) {
        return Err(domain(format!("ε must be positive, got {eps}")));
    }
    if spec.s != 0.0 {
        return Err(Error::Unsupported(
            "the shape operator spectrum is listed at the zero loop only".into(),
        ));
    }
    let roots = spec.root_values();
    let mut out = Vec::new();
    for n in 1.. {
        let k = TAU * n as f64;
        let damp = (-eps * k * k).exp() / k;
        let mut largest = 0.0f64;
        for &(_, ax) in &roots {
            let mu = ax * damp;
            largest = largest.max(mu.abs());
            out.push((mu, 1));
            out.push((-mu, 1));
        }
        out.push((0.0, spec.rank as u32));
        if largest < 1e-300 {
            break;
        }
    }
    Ok(out)
}

/// `tr H_x̂^ε` by summing each `±` pair before accumulation.
///
/// Points `s ≠ 0` are carried to the zero loop by the isometries of the
/// orbit family, so the trace is evaluated there.
pub fn trace_shape_eps(spec: &LoopGroupOrbitSpec, eps: f64) -> Result<f64> {
    let base = spec.at(0.0);
    let modes = shape_eps_spectrum(&base, eps)?;
    let mut acc = CompensatedSum::new();
    let mut i = 0;
    while i < modes.len() {
        let (a, ma) = modes[i];
        match modes.get(i + 1) {
            Some(&(b, mb)) if b == -a && mb == ma => {
                acc.add(ma as f64 * (a + b));
                i += 2;
            }
            _ => {
                acc.add(ma as f64 * a);
                i += 1;
            }
        }
    }
    Ok(acc.total())
}

/// `-½ Σ mult δλ/λ e^{-ελ}` for any spectrum with eigenvalue derivatives.
pub fn shape_trace(spectrum: &Spectrum, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(domain(format!("ε must be positive, got {eps}")));
    }
    let max_d = spectrum
        .lattices()
        .map(|l| l.shift_derivative.abs())
        .fold(0.0, f64::max);
    // |δλ/λ| = 2|δθ|/|u|
    let total = spectrum.mode_sum(
        eps,
        1e-15,
        |u| 2.0 * max_d / u,
        |lambda, dlambda| dlambda / lambda * (-eps * lambda).exp(),
    );
    Ok(-0.5 * total)
}

/// `log vol′_ε = ½ log det′_ε τ*τ`.
pub fn log_vol_eps(spec: &LoopGroupOrbitSpec, eps: f64) -> Result<f64> {
    Ok(0.5 * log_det_eps(&orbit_spectrum(spec, true)?, eps, true)?)
}

pub fn vol_eps(spec: &LoopGroupOrbitSpec, eps: f64) -> Result<f64> {
    Ok(log_vol_eps(spec, eps)?.exp())
}

/// `log vol′_reg = ½ log det′_reg τ*τ` with the analytic expansion.
pub fn log_vol_reg(spec: &LoopGroupOrbitSpec) -> Result<Estimate> {
    let spectrum = orbit_spectrum(spec, true)?;
    let exp = exact_expansion(&spectrum, true)?;
    let d = log_det_reg(&spectrum, &exp)?;
    Ok(Estimate::new(0.5 * d.value, 0.5 * d.error))
}

/// `log Vol′_reg = ½ log Det′_reg τ*τ`.
#[allow(non_snake_case)]
pub fn log_Vol_reg(spec: &LoopGroupOrbitSpec) -> Result<Estimate> {
    let spectrum = orbit_spectrum(spec, true)?;
    let exp = exact_expansion(&spectrum, true)?;
    let d = log_Det_reg(&spectrum, &exp)?;
    Ok(Estimate::new(0.5 * d.value, 0.5 * d.error))
}

pub fn vol_reg(spec: &LoopGroupOrbitSpec) -> Result<f64> {
    Ok(log_vol_reg(spec)?.value.exp())
}

#[allow(non_snake_case)]
pub fn Vol_reg(spec: &LoopGroupOrbitSpec) -> Result<f64> {
    Ok(log_Vol_reg(spec)?.value.exp())
}

/// Central difference at `s0` with steps `h` and `2h`, combined by one
/// Richardson step. The error is a third of the gap between the two.
pub fn gateaux_fd<F>(mut f: F, s0: f64, step: f64) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(domain("finite-difference step must be positive"));
    }
    let mut sample = |s: f64| -> Result<f64> {
        let v = f(s)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("non-finite sample at s = {s}")))
        }
    };
    let d1 = (sample(s0 + step)? - sample(s0 - step)?) / (2.0 * step);
    let d2 = (sample(s0 + 2.0 * step)? - sample(s0 - 2.0 * step)?) / (4.0 * step);
    Ok(Estimate::new((4.0 * d1 - d2) / 3.0, (d1 - d2).abs() / 3.0))
}

/// A one-parameter family of operators `s ↦ B(s)` whose spectra carry the
/// derivative `d/ds` of every eigenvalue.
pub trait SpectralPath {
    /// Primed spectrum at `s`.
    fn spectrum_at(&self, s: f64) -> Result<Spectrum>;
    /// Base point of the curvature computation.
    fn base(&self) -> f64;
    /// `tr H^ε` at the base point.
    fn shape_trace_eps(&self, eps: f64) -> Result<f64> {
        shape_trace(&self.spectrum_at(self.base())?, eps)
    }
    /// Point at which the regularised curvature is evaluated.
    fn curvature_point(&self) -> f64 {
        self.base()
    }
}

impl SpectralPath for LoopGroupOrbitSpec {
    fn spectrum_at(&self, s: f64) -> Result<Spectrum> {
        orbit_spectrum(&self.at(s), true)
    }

    fn base(&self) -> f64 {
        self.s
    }

    fn shape_trace_eps(&self, eps: f64) -> Result<f64> {
        trace_shape_eps(self, eps)
    }

    fn curvature_point(&self) -> f64 {
        0.0
    }
}

/// A lattice family whose shift moves with `s`: `(c n + θ₀ + v s)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedLatticePath {
    pub scale: f64,
    pub shift: f64,
    pub side: LatticeSide,
    pub multiplicity: u32,
    pub velocity: f64,
}

impl SpectralPath for ShiftedLatticePath {
    fn spectrum_at(&self, s: f64) -> Result<Spectrum> {
        let l = Lattice::new(
            self.scale,
            self.shift + self.velocity * s,
            self.side,
            self.multiplicity,
            self.velocity,
        )?;
        Spectrum::new(vec![EigenFamily::Lattice(l)], 0)
    }

    fn base(&self) -> f64 {
        0.0
    }
}

/// Finitely many eigenvalues moving linearly, `λ_i + v_i s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePath {
    pub modes: Vec<(f64, u32, f64)>,
}

impl SpectralPath for FinitePath {
    fn spectrum_at(&self, s: f64) -> Result<Spectrum> {
        let modes = self
            .modes
            .iter()
            .map(|&(l, m, v)| ExplicitMode {
                eigenvalue: l + v * s,
                multiplicity: m,
                derivative: v,
            })
            .collect();
        Spectrum::new(vec![EigenFamily::Explicit(modes)], 0)
    }

    fn base(&self) -> f64 {
        0.0
    }
}

/// Curvature and minimality data along a direction.
#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct CurvatureReport {
    pub eps_grid: Vec<f64>,
    pub tr_H_eps: Vec<f64>,
    /// Regularised limit of `tr H^ε`.
    pub tr_reg_H: f64,
    pub tr_reg_H_error: f64,
    /// `½ δζ′(0)`, the zeta-regularised trace.
    pub Tr_reg_H: f64,
    pub Tr_reg_H_error: f64,
    /// `Tr_reg H - tr_reg H - ½ γ δb₀`.
    pub zeta_heat_residual: f64,
    pub delta_b: IndexedMap,
    /// `-tr H^ε` at `ε = GATEAUX_EPS`.
    pub gateaux_log_vol_eps_analytic: f64,
    /// Finite difference of `log vol′_ε` at the actual position.
    pub gateaux_log_vol_eps_fd: f64,
    /// Finite difference of `log vol′_reg` at the actual position.
    pub gateaux_log_vol_reg_fd: f64,
    pub strongly_minimal: bool,
    pub heat_minimal: bool,
    pub zeta_minimal: bool,
}

/// Tolerance for the minimality flags.
pub const MINIMALITY_TOL: f64 = 1e-8;
/// `ε` at which the Gâteaux derivatives are compared.
pub const GATEAUX_EPS: f64 = 1e-2;
/// Finite-difference step along the path.
pub const GATEAUX_STEP: f64 = 1e-3;

/// `ε_k = 1e-2 / 4^k`, `k = 0..=6`.
pub fn curvature_eps_grid() -> Vec<f64> {
    (0..7).map(|k| 1e-2 / 4f64.powi(k)).collect()
}

/// Assemble the curvature report of `path`.
///
/// `tr_reg H` is the regularised limit of `tr H^ε` with counterterms
/// `a_j = -½ δb_{j+m}`; `Tr_reg H = ½ δζ′(0)` is computed independently from
/// the zeta closed form.
pub fn minimality_report<P: SpectralPath + ?Sized>(path: &P) -> Result<CurvatureReport> {
    let point = path.curvature_point();
    let spectrum = path.spectrum_at(point)?;
    let exp = exact_expansion(&spectrum, true)?;
    let m = exp.m() as i32;
    let delta_b = exp.coeff_derivatives().clone();

    let eps_grid = curvature_eps_grid();
    let tr_h_eps = eps_grid
        .iter()
        .map(|&e| path.shape_trace_eps(e))
        .collect::<Result<Vec<_>>>()?;
    let counter = IndexedMap(
        (-(exp.J() as i32)..0)
            .map(|j| (j, -0.5 * exp.coeff_derivative(j + m)))
            .collect(),
    );
    let mut cached = eps_grid.iter().copied().zip(tr_h_eps.iter().copied());
    let LimitTrace {
        value: tr_reg,
        error: tr_reg_error,
        ..
    } = reg_limit_trace(
        |_| Ok(cached.next().expect("one sample per ε").1),
        &counter,
        exp.m(),
        &eps_grid,
    )?;

    let dzeta = zeta_prime0_variation(&spectrum, &exp)?;
    let big_tr = 0.5 * dzeta.value;
    let db0 = exp.coeff_derivative(0);
    let residual = big_tr - tr_reg - 0.5 * EULER_GAMMA * db0;

    let analytic = -path.shape_trace_eps(GATEAUX_EPS)?;
    let base = path.base();
    let fd_eps = gateaux_fd(
        |s| Ok(0.5 * log_det_eps(&path.spectrum_at(s)?, GATEAUX_EPS, true)?),
        base,
        GATEAUX_STEP,
    )?;
    let fd_reg = gateaux_fd(
        |s| {
            let sp = path.spectrum_at(s)?;
            let e = exact_expansion(&sp, true)?;
            Ok(0.5 * log_det_reg(&sp, &e)?.value)
        },
        base,
        GATEAUX_STEP,
    )?;

    let heat_minimal = tr_reg.abs() <= MINIMALITY_TOL;
    let zeta_minimal = big_tr.abs() <= MINIMALITY_TOL;
    let strongly_minimal = heat_minimal
        && tr_h_eps.iter().all(|v| v.abs() <= MINIMALITY_TOL)
        && delta_b.0.values().all(|v| v.abs() <= MINIMALITY_TOL);
    Ok(CurvatureReport {
        eps_grid,
        tr_H_eps: tr_h_eps,
        tr_reg_H: tr_reg,
        tr_reg_H_error: tr_reg_error,
        Tr_reg_H: big_tr,
        Tr_reg_H_error: 0.5 * dzeta.error,
        zeta_heat_residual: residual,
        delta_b,
        gateaux_log_vol_eps_analytic: analytic,
        gateaux_log_vol_eps_fd: fd_eps.value,
        gateaux_log_vol_reg_fd: fd_reg.value,
        strongly_minimal,
        heat_minimal,
        zeta_minimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat_expansion::analytic_expansion;
    use std::f64::consts::PI;

    fn su2(s: f64) -> LoopGroupOrbitSpec {
        LoopGroupOrbitSpec::new(1, vec![vec![1.0]], vec![1.0], s).unwrap()
    }

    #[test]
    fn orbit_spectrum_contents() {
        let sp = orbit_spectrum(&su2(0.25), false).unwrap();
        assert_eq!(sp.kernel_dim(), 1);
        let explicit: Vec<_> = sp.explicit_modes().collect();
        assert_eq!(explicit.len(), 1);
        assert_eq!(explicit[0].eigenvalue, 0.0625);
        assert_eq!(explicit[0].multiplicity, 2);
        let roots: Vec<_> = sp.lattices().map(|l| (l.shift, l.multiplicity)).collect();
        assert_eq!(roots, vec![(-0.25, 2), (0.25, 2), (0.0, 2)]);

        let zero = orbit_spectrum(&su2(0.0), false).unwrap();
        assert_eq!(zero.kernel_dim(), 3);
    }

    #[test]
    fn weyl_density() {
        let sp = orbit_spectrum(&su2(0.3), true).unwrap();
        let e = analytic_expansion(&sp, true).unwrap();
        assert!((e.coeff(-1) - 3.0 / (2.0 * PI.sqrt())).abs() < 1e-14);
        assert!(e.coeff_derivatives().0.values().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn shape_spectrum_pairs_cancel() {
        let modes = shape_eps_spectrum(&su2(0.0), 0.01).unwrap();
        let expected = (-0.01 * TAU * TAU).exp() / TAU;
        assert!((modes[0].0 - expected).abs() < 1e-16);
        assert!((modes[0].0 - 0.107_242_651_3).abs() < 1e-10);
        assert_eq!(modes[0].0, -modes[1].0);
        for eps in [1e-3, 0.01, 0.1, 10.0] {
            assert!(trace_shape_eps(&su2(0.25), eps).unwrap().abs() < 1e-12);
        }
        assert!(shape_eps_spectrum(&su2(0.25), 0.01).is_err());
    }

    #[test]
    fn gateaux_examples() {
        let d = gateaux_fd(|s| Ok(s * s), 1.0, 1e-3).unwrap();
        assert!((d.value - 2.0).abs() < 1e-10);
        let d = gateaux_fd(|s| Ok((4.0 * (s / 2.0).sin().powi(2)).ln()), PI / 2.0, 1e-3).unwrap();
        assert!((d.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn abelian_volume_is_one() {
        let spec = LoopGroupOrbitSpec::new(1, vec![], vec![1.0], 0.0).unwrap();
        assert!(log_Vol_reg(&spec).unwrap().value.abs() < 1e-9);
    }

    #[test]
    fn finite_path_reproduces_jacobi() {
        let path = FinitePath {
            modes: vec![(2.0, 1, 0.5), (3.0, 2, -1.0)],
        };
        let r = minimality_report(&path).unwrap();
        let jacobi = -0.5 * (0.5 / 2.0 + -2.0 / 3.0);
        assert!((r.tr_reg_H - jacobi).abs() < 1e-12, "{r:?}");
        assert!((r.Tr_reg_H - jacobi).abs() < 1e-10);
    }
}
