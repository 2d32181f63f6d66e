//! Small-time expansions `tr e^{-tB} ≃ Σ_{j=-J}^{m-1} b_j t^{j/m}`.
//!
//! Lattice families have closed-form coefficients from the theta transform.
//! For a one-sided family `(c n + θ)²`, `n ≥ 1`, writing `q = 1 + θ/c`,
//!
//! ```text
//! Σ_{n≥1} e^{-t(cn+θ)²} ≃ √π/(2c√t) + Σ_{k≥0} (-c² t)^k / k! · ζ_H(-2k, q),
//! ζ_H(-2k, q) = -B_{2k+1}(q) / (2k+1),
//! ```
//!
//! up to exponentially small terms. Full lattices have no power terms beyond
//! `t^{-1/2}`. The integer powers `t^k`, `k ≥ 1`, make up the remainder
//! `F(t)` and are kept as a series so that `∫_0^{t₀} t^{s-1} F(t) dt` can be
//! evaluated in closed form.

use crate::error::{domain, Error, Result};
use crate::special::{bernoulli_polynomial, Tolerance};
use crate::spectra::{EigenFamily, LatticeSide, Spectrum};
use nalgebra::{DMatrix, DVector};
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Number of remainder terms `d_k t^k` kept for analytic expansions.
const REMAINDER_TERMS: usize = 12;

/// Map from an integer index to a real, serialised with string keys in
/// ascending numeric order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndexedMap(pub BTreeMap<i32, f64>);

impl IndexedMap {
    pub fn get(&self, j: i32) -> f64 {
        self.0.get(&j).copied().unwrap_or(0.0)
    }
}

impl Serialize for IndexedMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (j, v) in &self.0 {
            map.serialize_entry(&j.to_string(), v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpansionSource {
    #[serde(rename = "analytic")]
    Analytic,
    #[serde(rename = "fitted")]
    Fitted,
}

/// Heat-trace expansion with coefficient derivatives and remainder data.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatExpansion {
    m: u32,
    big_j: u32,
    coeffs: IndexedMap,
    coeff_derivatives: IndexedMap,
    source: ExpansionSource,
    primed: bool,
    kernel_dim: usize,
    /// `d_k` and `δd_k` for `k = 1, 2, ...`: `F(t) ≈ Σ d_k t^k`.
    remainder_series: Vec<(f64, f64)>,
    /// Scale `κ` such that the remainder series is usable for `κ t ≤ 1/4`.
    series_scale: f64,
    remainder_bound: f64,
}

impl Serialize for HeatExpansion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("HeatExpansion", 7)?;
        s.serialize_field("m", &self.m)?;
        s.serialize_field("J", &self.big_j)?;
        s.serialize_field("coeffs", &self.coeffs)?;
        s.serialize_field("coeff_derivatives", &self.coeff_derivatives)?;
        s.serialize_field("source", &self.source)?;
        s.serialize_field("primed", &self.primed)?;
        s.serialize_field("remainder_bound", &self.remainder_bound)?;
        s.end()
    }
}

/// Accumulates coefficients family by family.
struct Builder {
    m: u32,
    big_j: u32,
    coeffs: BTreeMap<i32, f64>,
    derivs: BTreeMap<i32, f64>,
    series: Vec<(f64, f64)>,
    scale: f64,
}

impl Builder {
    fn new(m: u32, big_j: u32) -> Self {
        let range = -(big_j as i32)..(m as i32);
        Self {
            m,
            big_j,
            coeffs: range.clone().map(|j| (j, 0.0)).collect(),
            derivs: range.map(|j| (j, 0.0)).collect(),
            series: vec![(0.0, 0.0); REMAINDER_TERMS],
            scale: 0.0,
        }
    }

    fn add(&mut self, j: i32, value: f64, derivative: f64) {
        *self.coeffs.get_mut(&j).expect("index in range") += value;
        *self.derivs.get_mut(&j).expect("index in range") += derivative;
    }

    fn add_explicit(&mut self, lambda: f64, mult: f64, dlambda: f64) {
        self.add(0, mult, 0.0);
        // e^{-tλ} = Σ (-λ)^k t^k / k!
        let mut term = mult;
        let mut dterm_prev = mult;
        for k in 1..=REMAINDER_TERMS {
            let kf = k as f64;
            let d_value = term * (-lambda) / kf;
            // δ[(-λ)^k / k!] = -(-λ)^{k-1} / (k-1)! · δλ
            let d_deriv = -dterm_prev * dlambda;
            self.series[k - 1].0 += d_value;
            self.series[k - 1].1 += d_deriv;
            dterm_prev = d_value;
            term = d_value;
        }
        self.scale = self.scale.max(lambda);
    }

    fn finish(self, source: ExpansionSource, primed: bool, kernel_dim: usize) -> HeatExpansion {
        HeatExpansion {
            m: self.m,
            big_j: self.big_j,
            coeffs: IndexedMap(self.coeffs),
            coeff_derivatives: IndexedMap(self.derivs),
            source,
            primed,
            kernel_dim,
            remainder_series: self.series,
            series_scale: self.scale,
            remainder_bound: 0.0,
        }
    }
}

/// Closed-form expansion (`m = J = 2`) of a spectrum containing at least one
/// lattice family. Explicit modes contribute to `b₀` and to the remainder.
///
/// With `primed` the zero modes are left out of `b₀`; otherwise they count.
pub fn analytic_expansion(spec: &Spectrum, primed: bool) -> Result<HeatExpansion> {
    if !spec.has_lattice() {
        return Err(Error::Unsupported(
            "spectrum has no lattice family; use finite_expansion or fit_expansion".into(),
        ));
    }
    let sqrt_pi = PI.sqrt();
    let mut b = Builder::new(2, 2);
    for family in spec.families() {
        match family {
            EigenFamily::Lattice(l) => {
                let mu = l.multiplicity as f64;
                let c = l.scale;
                let dtheta = l.shift_derivative;
                b.scale = b.scale.max(c * c);
                match l.side {
                    LatticeSide::Full => b.add(-1, mu * sqrt_pi / c, 0.0),
                    LatticeSide::Positive => {
                        let q = 1.0 + l.shift / c;
                        b.add(-1, mu * sqrt_pi / (2.0 * c), 0.0);
                        b.add(0, -mu * (0.5 + l.shift / c), -mu / c * dtheta);
                        let mut power = mu;
                        for k in 1..=REMAINDER_TERMS {
                            power *= -c * c / k as f64;
                            let n = 2 * k + 1;
                            let d = power * -bernoulli_polynomial(n, q) / n as f64;
                            // ∂_θ B_{2k+1}(q) = (2k+1) B_{2k}(q) / c
                            let dd = power * -bernoulli_polynomial(n - 1, q) / c * dtheta;
                            b.series[k - 1].0 += d;
                            b.series[k - 1].1 += dd;
                        }
                    }
                }
            }
            EigenFamily::Explicit(modes) => {
                for m in modes {
                    b.add_explicit(m.eigenvalue, m.multiplicity as f64, m.derivative);
                }
            }
        }
    }
    finish_exact(b, spec, primed)
}

/// Exact expansion of a finite spectrum: `m = J = 1`, `b₀` the dimension.
pub fn finite_expansion(spec: &Spectrum, primed: bool) -> Result<HeatExpansion> {
    if spec.has_lattice() {
        return Err(Error::Unsupported(
            "finite_expansion needs a spectrum without lattice families".into(),
        ));
    }
    let mut b = Builder::new(1, 1);
    for m in spec.explicit_modes() {
        b.add_explicit(m.eigenvalue, m.multiplicity as f64, m.derivative);
    }
    finish_exact(b, spec, primed)
}

/// Closed-form expansion of any supported spectrum.
pub fn exact_expansion(spec: &Spectrum, primed: bool) -> Result<HeatExpansion> {
    if spec.has_lattice() {
        analytic_expansion(spec, primed)
    } else {
        finite_expansion(spec, primed)
    }
}

fn finish_exact(mut b: Builder, spec: &Spectrum, primed: bool) -> Result<HeatExpansion> {
    let kernel = spec.kernel_dim();
    // Lattice formulas count structural zeros; free zero modes are added here.
    let structural: usize = spec.lattices().map(|l| l.structural_kernel()).sum();
    b.add(0, (kernel - structural) as f64, 0.0);
    if primed {
        b.add(0, -(kernel as f64), 0.0);
    }
    let mut exp = b.finish(ExpansionSource::Analytic, primed, kernel);
    exp.remainder_bound = estimate_remainder_bound(spec, &exp)?;
    Ok(exp)
}

/// `max |F(t)|/t` over a log grid on `[1e-4, 1]`, inflated by 25%, and never
/// below the leading remainder coefficient.
fn estimate_remainder_bound(spec: &Spectrum, exp: &HeatExpansion) -> Result<f64> {
    const POINTS: usize = 60;
    let mut worst = exp.remainder_series.first().map_or(0.0, |d| d.0.abs());
    for i in 0..POINTS {
        let t = 10f64.powf(-4.0 + 4.0 * i as f64 / (POINTS - 1) as f64);
        worst = worst.max(remainder_f(spec, exp, t)?.abs() / t);
    }
    Ok(1.25 * worst)
}

/// Least-squares fit of heat-trace samples.
///
/// The design has the columns `t^{j/m}` for `j = -J ..= m-1` plus two
/// columns `t^{k/m}`, `k = m, m+1`, which absorb the leading remainder and
/// are then discarded. Rows are weighted by `t^{-3}` so that the fit is
/// decided where the expansion is asymptotically exact. Columns are scaled
/// to unit norm; a condition number above `1e12` is rejected.
pub fn fit_expansion(
    spec: &Spectrum,
    m: u32,
    big_j: u32,
    grid: &[f64],
    primed: bool,
) -> Result<HeatExpansion> {
    if m == 0 || big_j < m {
        return Err(domain(format!(
            "need m ≥ 1 and J ≥ m, got m={m}, J={big_j}"
        )));
    }
    let needed = 3 * (big_j + m) as usize;
    if grid.len() < needed {
        return Err(domain(format!(
            "fit grid has {} points, at least {needed} required",
            grid.len()
        )));
    }
    if grid.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(domain("fit grid must lie in (0, 1]"));
    }
    let powers: Vec<i32> = (-(big_j as i32)..(m as i32 + 2)).collect();
    let mf = m as f64;
    let rows = grid.len();
    let cols = powers.len();
    let weight = |t: f64| t.powi(-3);
    let mut design = DMatrix::from_fn(rows, cols, |i, k| {
        weight(grid[i]) * grid[i].powf(powers[k] as f64 / mf)
    });
    let mut norms = Vec::with_capacity(cols);
    for mut col in design.column_iter_mut() {
        let n = col.norm();
        col /= n;
        norms.push(n);
    }
    let tol = Tolerance::default();
    let rhs = DVector::from_iterator(
        rows,
        grid.iter()
            .map(|&t| Ok(weight(t) * spec.heat_trace(t, tol, !primed)?))
            .collect::<Result<Vec<_>>>()?,
    );
    let singular = design.clone().svd(false, false).singular_values;
    let smax = singular.max();
    let smin = singular.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if condition > 1e12 {
        return Err(Error::IllConditioned { condition });
    }
    let qr = design.qr();
    let qtb = qr.q().transpose() * &rhs;
    let solution = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Numeric("singular triangular factor in fit".into()))?;

    let mut b = Builder::new(m, big_j);
    for (k, &j) in powers.iter().enumerate() {
        if j < m as i32 {
            b.add(j, solution[k] / norms[k], 0.0);
        }
    }
    let mut exp = b.finish(ExpansionSource::Fitted, primed, spec.kernel_dim());
    exp.remainder_series.clear();
    let mut worst = 0.0f64;
    for &t in grid {
        worst = worst.max(remainder_f(spec, &exp, t)?.abs() / t);
    }
    exp.remainder_bound = worst;
    Ok(exp)
}

/// Default fit grid: 40 log-spaced points in `[1e-4, 1e-1]`.
pub fn default_fit_grid() -> Vec<f64> {
    (0..40)
        .map(|i| 10f64.powf(-4.0 + 3.0 * i as f64 / 39.0))
        .collect()
}

/// `F(t) = tr e^{-tB} - Σ b_j t^{j/m}` for `t ∈ (0, 1]`.
pub fn remainder_f(spec: &Spectrum, exp: &HeatExpansion, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(domain(format!("remainder is defined on (0, 1], got t={t}")));
    }
    let trace = spec.heat_trace(t, Tolerance::default(), !exp.primed)?;
    Ok(trace - exp.singular_part(t))
}

impl HeatExpansion {
    pub fn m(&self) -> u32 {
        self.m
    }

    #[allow(non_snake_case)]
    pub fn J(&self) -> u32 {
        self.big_j
    }

    pub fn source(&self) -> ExpansionSource {
        self.source
    }

    pub fn primed(&self) -> bool {
        self.primed
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn coeffs(&self) -> &IndexedMap {
        &self.coeffs
    }

    pub fn coeff_derivatives(&self) -> &IndexedMap {
        &self.coeff_derivatives
    }

    pub fn coeff(&self, j: i32) -> f64 {
        self.coeffs.get(j)
    }

    pub fn coeff_derivative(&self, j: i32) -> f64 {
        self.coeff_derivatives.get(j)
    }

    /// Constant coefficient with zero modes counted.
    pub fn b0(&self) -> f64 {
        if self.primed {
            self.coeff(0) + self.kernel_dim as f64
        } else {
            self.coeff(0)
        }
    }

    /// Constant coefficient with zero modes left out.
    pub fn b0_primed(&self) -> f64 {
        self.b0() - self.kernel_dim as f64
    }

    /// Constant `C` with `|F(t)| ≤ C t` on `(0, 1]`.
    pub fn remainder_bound(&self) -> f64 {
        self.remainder_bound
    }

    pub fn has_remainder_series(&self) -> bool {
        !self.remainder_series.is_empty()
    }

    /// `Σ_j b_j t^{j/m}`.
    pub fn singular_part(&self, t: f64) -> f64 {
        let mf = self.m as f64;
        self.coeffs
            .0
            .iter()
            .map(|(&j, &b)| {
                if b == 0.0 {
                    0.0
                } else {
                    b * t.powf(j as f64 / mf)
                }
            })
            .sum()
    }

    /// `Σ_j δb_j t^{j/m}`.
    pub fn singular_part_variation(&self, t: f64) -> f64 {
        let mf = self.m as f64;
        self.coeff_derivatives
            .0
            .iter()
            .map(|(&j, &b)| {
                if b == 0.0 {
                    0.0
                } else {
                    b * t.powf(j as f64 / mf)
                }
            })
            .sum()
    }

    /// `m b_j / j` for every `j < 0`.
    pub fn counterterms(&self) -> IndexedMap {
        let mf = self.m as f64;
        IndexedMap(
            self.coeffs
                .0
                .iter()
                .filter(|(&j, _)| j < 0)
                .map(|(&j, &b)| (j, mf * b / j as f64))
                .collect(),
        )
    }

    /// Largest `t₀ ≤ 1e-2` at which the remainder series is used.
    pub fn series_cutoff(&self) -> f64 {
        if self.series_scale > 0.0 {
            (0.25 / self.series_scale).min(1e-2)
        } else {
            1e-2
        }
    }

    /// `∫_0^{t₀} t^{s-1} F(t) dt` from the remainder series, with the size of
    /// the last term kept as an error estimate, and likewise for `δF`.
    /// `None` for fitted expansions.
    pub(crate) fn remainder_mellin_head(&self, s: f64, t0: f64) -> Option<[(f64, f64); 2]> {
        if self.remainder_series.is_empty() {
            return None;
        }
        let mut value = 0.0;
        let mut dvalue = 0.0;
        let mut last = (0.0, 0.0);
        for (i, &(d, dd)) in self.remainder_series.iter().enumerate() {
            let k = (i + 1) as f64;
            let w = t0.powf(k + s) / (k + s);
            value += d * w;
            dvalue += dd * w;
            last = ((d * w).abs(), (dd * w).abs());
        }
        Some([(value, last.0), (dvalue, last.1)])
    }

    /// Coefficient-wise sum of two expansions with the same `m` and priming.
    pub fn direct_sum(&self, other: &HeatExpansion) -> Result<HeatExpansion> {
        if self.m != other.m || self.primed != other.primed {
            return Err(domain(
                "expansions must share m and the zero-mode convention",
            ));
        }
        let big_j = self.big_j.max(other.big_j);
        let mut b = Builder::new(self.m, big_j);
        for e in [self, other] {
            for (&j, &v) in &e.coeffs.0 {
                b.add(j, v, e.coeff_derivative(j));
            }
        }
        let keep_series = self.has_remainder_series() && other.has_remainder_series();
        let source = if self.source == ExpansionSource::Analytic
            && other.source == ExpansionSource::Analytic
        {
            ExpansionSource::Analytic
        } else {
            ExpansionSource::Fitted
        };
        let mut exp = b.finish(source, self.primed, self.kernel_dim + other.kernel_dim);
        if keep_series {
            for (i, slot) in exp.remainder_series.iter_mut().enumerate() {
                slot.0 = self.remainder_series[i].0 + other.remainder_series[i].0;
                slot.1 = self.remainder_series[i].1 + other.remainder_series[i].1;
            }
        } else {
            exp.remainder_series.clear();
        }
        exp.series_scale = self.series_scale.max(other.series_scale);
        exp.remainder_bound = self.remainder_bound + other.remainder_bound;
        Ok(exp)
    }
}
