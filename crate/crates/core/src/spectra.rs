//! Operators presented by their spectra.
//!
//! A [`Spectrum`] is a list of eigenvalue families plus a count of zero modes.
//! Two kinds of family exist: a finite explicit list of modes, and a shifted
//! lattice `λ_n = (c·n + θ)²` over either all integers or `n ≥ 1`. Every mode
//! carries the derivative of its eigenvalue along one fixed direction, so
//! that variations of traces and determinants can be evaluated analytically.
//!
//! Zero modes are structural: they are identified from the construction data
//! (an explicit zero, or the lattice index with `c·n + θ = 0`) and never by
//! comparing computed eigenvalues against a threshold.

use crate::error::{domain, Error, Result};
use crate::special::Tolerance;
use crate::sum::CompensatedSum;
use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Index set of a lattice family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeSide {
    /// `n ∈ Z`
    #[serde(rename = "full")]
    Full,
    /// `n ≥ 1`
    #[serde(rename = "positive")]
    Positive,
}

/// One mode of an explicit family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplicitMode {
    pub eigenvalue: f64,
    pub multiplicity: u32,
    pub derivative: f64,
}

/// Eigenvalues `(scale·n + shift)²` over the index set given by `side`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub scale: f64,
    pub shift: f64,
    pub side: LatticeSide,
    pub multiplicity: u32,
    /// Derivative of `shift` along the studied direction.
    pub shift_derivative: f64,
    kernel_index: Option<i64>,
}

impl Lattice {
    pub fn new(
        scale: f64,
        shift: f64,
        side: LatticeSide,
        multiplicity: u32,
        shift_derivative: f64,
    ) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(domain(format!(
                "lattice scale must be positive, got {scale}"
            )));
        }
        if !shift.is_finite() || !shift_derivative.is_finite() {
            return Err(domain("lattice shift and its derivative must be finite"));
        }
        if multiplicity == 0 {
            return Err(domain("lattice multiplicity must be positive"));
        }
        let candidate = (-shift / scale).round();
        let kernel_index = (scale * candidate + shift == 0.0
            && (side == LatticeSide::Full || candidate >= 1.0))
            .then_some(candidate as i64);
        Ok(Self {
            scale,
            shift,
            side,
            multiplicity,
            shift_derivative,
            kernel_index,
        })
    }

    /// Number of structural zero modes (the index with `c·n + θ = 0`).
    pub fn structural_kernel(&self) -> usize {
        if self.kernel_index.is_some() {
            self.multiplicity as usize
        } else {
            0
        }
    }

    #[inline]
    fn root(&self, n: i64) -> f64 {
        self.scale * n as f64 + self.shift
    }

    fn in_index_set(&self, n: i64) -> bool {
        match self.side {
            LatticeSide::Full => true,
            LatticeSide::Positive => n >= 1,
        }
    }

    /// Smallest non-zero eigenvalue of the family.
    pub fn min_positive_eigenvalue(&self) -> f64 {
        let center = (-self.shift / self.scale).round() as i64;
        let mut best = f64::INFINITY;
        let mut consider = |n: i64| {
            if self.in_index_set(n) && Some(n) != self.kernel_index {
                let u = self.root(n);
                best = best.min(u * u);
            }
        };
        for n in center - 2..=center + 2 {
            consider(n);
        }
        if self.side == LatticeSide::Positive {
            consider(1);
            consider(2);
        }
        best
    }

    /// Largest index magnitude `N` such that the modes left out,
    /// `|n| > N` (or `n > N`), satisfy
    /// `mult · Σ weight(|u_n|) e^{-t u_n²} ≤ tol`, where `weight` is
    /// non-increasing in `|u|`.
    ///
    /// Uses `Σ_{n>N} e^{-t u_n²} ≤ e^{-t u²}(1 + 1/(2 t c u))` with
    /// `u = c(N+1) ± θ > 0` on each side.
    pub(crate) fn cutoff<W: Fn(f64) -> f64>(&self, t: f64, tol: f64, weight: W) -> i64 {
        let c = self.scale;
        let mult = self.multiplicity as f64;
        let side_bound = |u: f64| -> f64 {
            if u <= 0.0 {
                return f64::INFINITY;
            }
            mult * weight(u) * (-t * u * u).exp() * (1.0 + 1.0 / (2.0 * t * c * u))
        };
        let bound = |n: i64| -> f64 {
            let up = side_bound(c * (n + 1) as f64 + self.shift);
            match self.side {
                LatticeSide::Positive => up,
                LatticeSide::Full => up + side_bound(c * (n + 1) as f64 - self.shift),
            }
        };
        let mut lo = (self.shift.abs() / c).ceil() as i64 + 1;
        if bound(lo) <= tol {
            return lo;
        }
        let mut hi = lo.max(1) * 2;
        while bound(hi) > tol {
            lo = hi;
            hi *= 2;
            if hi > 1 << 40 {
                return hi;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if bound(mid) <= tol {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Compensated sum of `f(u_n)` over `|n| ≤ n_max` in ascending `|n|`,
    /// the `+n` and `-n` terms of a full lattice paired before accumulation.
    /// The structural zero mode is skipped. Multiplicity is not applied.
    pub(crate) fn sum_roots<F: FnMut(f64) -> f64>(&self, n_max: i64, mut f: F) -> f64 {
        let mut acc = CompensatedSum::new();
        let skip = self.kernel_index;
        let term = |n: i64, f: &mut F| -> f64 {
            if Some(n) == skip {
                0.0
            } else {
                f(self.root(n))
            }
        };
        match self.side {
            LatticeSide::Full => {
                acc.add(term(0, &mut f));
                for n in 1..=n_max {
                    let pair = term(n, &mut f) + term(-n, &mut f);
                    acc.add(pair);
                }
            }
            LatticeSide::Positive => {
                for n in 1..=n_max {
                    acc.add(term(n, &mut f));
                }
            }
        }
        acc.total()
    }
}

/// A family of eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub enum EigenFamily {
    /// Finite list of strictly positive eigenvalues, sorted ascending.
    Explicit(Vec<ExplicitMode>),
    Lattice(Lattice),
}

/// An operator given by eigenvalue families and a number of zero modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    families: Vec<EigenFamily>,
    free_kernel: usize,
}

/// Build a spectrum from finitely many `(eigenvalue, multiplicity, derivative)` triples.
/// Zero eigenvalues become kernel modes.
pub fn finite_spectrum(values: &[(f64, u32, f64)]) -> Result<Spectrum> {
    let modes = values
        .iter()
        .map(|&(eigenvalue, multiplicity, derivative)| ExplicitMode {
            eigenvalue,
            multiplicity,
            derivative,
        })
        .collect();
    Spectrum::new(vec![EigenFamily::Explicit(modes)], 0)
}

/// Spectrum made of a single lattice family.
pub fn lattice_family(
    scale: f64,
    shift: f64,
    side: LatticeSide,
    multiplicity: u32,
    shift_derivative: f64,
) -> Result<Spectrum> {
    let lattice = Lattice::new(scale, shift, side, multiplicity, shift_derivative)?;
    Spectrum::new(vec![EigenFamily::Lattice(lattice)], 0)
}

impl Spectrum {
    /// Assemble a spectrum. Explicit zero eigenvalues are moved into the
    /// kernel; `extra_kernel` adds zero modes not attached to any family.
    pub fn new(families: Vec<EigenFamily>, extra_kernel: usize) -> Result<Self> {
        let mut free_kernel = extra_kernel;
        let mut cleaned = Vec::with_capacity(families.len());
        for family in families {
            match family {
                EigenFamily::Explicit(modes) => {
                    let mut kept = Vec::with_capacity(modes.len());
                    for m in modes {
                        if !m.eigenvalue.is_finite() || m.eigenvalue < 0.0 {
                            return Err(domain(format!(
                                "eigenvalues must be finite and non-negative, got {}",
                                m.eigenvalue
                            )));
                        }
                        if !m.derivative.is_finite() {
                            return Err(domain("eigenvalue derivatives must be finite"));
                        }
                        if m.multiplicity == 0 {
                            return Err(domain("multiplicities must be positive"));
                        }
                        if m.eigenvalue == 0.0 {
                            free_kernel += m.multiplicity as usize;
                        } else {
                            kept.push(m);
                        }
                    }
                    kept.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
                    if !kept.is_empty() {
                        cleaned.push(EigenFamily::Explicit(kept));
                    }
                }
                lattice => cleaned.push(lattice),
            }
        }
        let spec = Self {
            families: cleaned,
            free_kernel,
        };
        if !spec.min_positive_eigenvalue().is_finite() {
            return Err(domain("spectrum has no positive eigenvalue"));
        }
        Ok(spec)
    }

    pub fn families(&self) -> &[EigenFamily] {
        &self.families
    }

    /// Total number of zero modes, structural lattice zeros included.
    pub fn kernel_dim(&self) -> usize {
        self.free_kernel
            + self
                .lattices()
                .map(|l| l.structural_kernel())
                .sum::<usize>()
    }

    pub fn lattices(&self) -> impl Iterator<Item = &Lattice> {
        self.families.iter().filter_map(|f| match f {
            EigenFamily::Lattice(l) => Some(l),
            EigenFamily::Explicit(_) => None,
        })
    }

    pub fn explicit_modes(&self) -> impl Iterator<Item = &ExplicitMode> {
        self.families.iter().flat_map(|f| match f {
            EigenFamily::Explicit(modes) => modes.as_slice(),
            EigenFamily::Lattice(_) => &[],
        })
    }

    pub fn has_lattice(&self) -> bool {
        self.lattices().next().is_some()
    }

    pub fn is_finite(&self) -> bool {
        !self.has_lattice()
    }

    /// Number of non-zero modes; `None` when a lattice family is present.
    pub fn finite_dimension(&self) -> Option<usize> {
        self.is_finite()
            .then(|| self.explicit_modes().map(|m| m.multiplicity as usize).sum())
    }

    pub fn min_positive_eigenvalue(&self) -> f64 {
        self.families
            .iter()
            .map(|f| match f {
                EigenFamily::Explicit(modes) => {
                    modes.first().map_or(f64::INFINITY, |m| m.eigenvalue)
                }
                EigenFamily::Lattice(l) => l.min_positive_eigenvalue(),
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Direct sum of two operators.
    pub fn direct_sum(&self, other: &Spectrum) -> Spectrum {
        let mut families = self.families.clone();
        families.extend(other.families.iter().cloned());
        Spectrum {
            families,
            free_kernel: self.free_kernel + other.free_kernel,
        }
    }

    /// Spectrum of `factor · B`.
    pub fn scaled(&self, factor: f64) -> Result<Spectrum> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(domain(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let root = factor.sqrt();
        let families = self
            .families
            .iter()
            .map(|f| match f {
                EigenFamily::Explicit(modes) => Ok(EigenFamily::Explicit(
                    modes
                        .iter()
                        .map(|m| ExplicitMode {
                            eigenvalue: m.eigenvalue * factor,
                            multiplicity: m.multiplicity,
                            derivative: m.derivative * factor,
                        })
                        .collect(),
                )),
                EigenFamily::Lattice(l) => Ok(EigenFamily::Lattice(Lattice::new(
                    l.scale * root,
                    l.shift * root,
                    l.side,
                    l.multiplicity,
                    l.shift_derivative * root,
                )?)),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Spectrum {
            families,
            free_kernel: self.free_kernel,
        })
    }

    fn lattice_count(&self) -> usize {
        self.lattices().count().max(1)
    }

    /// `Σ mult · f(λ, δλ)` over every non-zero mode.
    ///
    /// Lattice families are truncated so that the omitted modes contribute at
    /// most `tol` in total, given that `|f(u², ·)| ≤ weight(|u|) e^{-t u²}`
    /// for `|u|` beyond the cutoff, with `weight` non-increasing.
    /// Families are reduced in declaration order.
    pub fn mode_sum<F, W>(&self, t: f64, tol: f64, weight: W, mut f: F) -> f64
    where
        F: FnMut(f64, f64) -> f64,
        W: Fn(f64) -> f64 + Copy,
    {
        let per_family = tol / self.lattice_count() as f64;
        let mut acc = CompensatedSum::new();
        for family in &self.families {
            match family {
                EigenFamily::Explicit(modes) => {
                    for m in modes {
                        acc.add(m.multiplicity as f64 * f(m.eigenvalue, m.derivative));
                    }
                }
                EigenFamily::Lattice(l) => {
                    let n_max = l.cutoff(t, per_family, weight);
                    let d = l.shift_derivative;
                    let s = l.sum_roots(n_max, |u| f(u * u, 2.0 * u * d));
                    acc.add(l.multiplicity as f64 * s);
                }
            }
        }
        acc.total()
    }

    /// `tr e^{-tB} = Σ mult · e^{-t λ_n}`, zero modes counted only when
    /// `include_kernel` is set. Truncation error at most `tol.abs_tol`.
    pub fn heat_trace(&self, t: f64, tol: Tolerance, include_kernel: bool) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain(format!("heat trace requires t > 0, got {t}")));
        }
        let value = self.mode_sum(
            t,
            0.5 * tol.abs_tol,
            |_| 1.0,
            |lambda, _| (-t * lambda).exp(),
        );
        Ok(if include_kernel {
            value + self.kernel_dim() as f64
        } else {
            value
        })
    }

    /// Variation of the heat trace along the studied direction,
    /// `δ tr e^{-tB} = -t Σ mult · δλ_n e^{-t λ_n}` (zero modes do not move).
    pub fn heat_trace_variation(&self, t: f64, tol: Tolerance) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain(format!("heat trace requires t > 0, got {t}")));
        }
        let max_d = self
            .lattices()
            .map(|l| l.shift_derivative.abs())
            .fold(0.0, f64::max);
        // |2u δθ| e^{-tu²} ≤ 2|δθ| (e t)^{-1/2} e^{-tu²/2}
        let weight = 2.0 * max_d / (std::f64::consts::E * t).sqrt();
        let value = self.mode_sum(
            0.5 * t,
            0.5 * tol.abs_tol / t,
            |_| weight,
            |lambda, dlambda| dlambda * (-t * lambda).exp(),
        );
        Ok(-t * value)
    }
}

/// Free-function form of [`Spectrum::heat_trace`].
pub fn heat_trace(spec: &Spectrum, t: f64, tol: Tolerance, include_kernel: bool) -> Result<f64> {
    spec.heat_trace(t, tol, include_kernel)
}

/// Extended-precision arithmetic for the theta oracle.
struct Ext {
    p: usize,
    cc: Consts,
}

impl Ext {
    const RM: RoundingMode = RoundingMode::ToEven;

    fn new(p: usize) -> Result<Self> {
        let cc = Consts::new().map_err(|e| Error::Numeric(format!("extended precision: {e:?}")))?;
        Ok(Self { p, cc })
    }

    fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    fn int(&self, n: i64) -> BigFloat {
        BigFloat::from_i64(n, self.p)
    }

    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, Self::RM)
    }

    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, Self::RM)
    }

    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, Self::RM)
    }

    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, Self::RM)
    }

    fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.p, Self::RM, &mut self.cc)
    }

    fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.p, Self::RM)
    }

    /// `e^{-t u²}` with `u = c n + θ` formed exactly.
    fn gauss(&mut self, t: &BigFloat, c: &BigFloat, theta: &BigFloat, n: i64) -> BigFloat {
        let u = self.add(&self.mul(c, &self.int(n)), theta);
        let arg = self.mul(t, &self.mul(&u, &u)).neg();
        self.exp(&arg)
    }

    /// `Σ_{n∈Z} e^{-t(cn+θ)²} = √π/(c√t) Σ_k e^{-π²k²/(c²t)} cos(2πkθ/c)`.
    fn theta_full(&mut self, t: &BigFloat, c: &BigFloat, theta: &BigFloat) -> BigFloat {
        let pi = self.pi();
        let ct = self.mul(c, &t.sqrt(self.p, Self::RM));
        let prefactor = self.div(&pi.sqrt(self.p, Self::RM), &ct);
        let decay = self.div(&self.mul(&pi, &pi), &self.mul(&ct, &ct));
        let phase = self.div(&self.mul(&self.add(&pi, &pi), theta), c);
        // Stop once the Gaussian factor is below the working precision.
        let cutoff = (self.p as f64 * std::f64::consts::LN_2 + 20.0)
            * to_f64(&self.div(&self.int(1), &decay));
        let mut acc = self.int(1);
        let mut k: i64 = 1;
        while ((k * k) as f64) < cutoff {
            let kk = self.int(k * k);
            let damp = self.exp(&self.mul(&decay, &kk).neg());
            let cos = self
                .mul(&phase, &self.int(k))
                .cos(self.p, Self::RM, &mut self.cc);
            acc = self.add(&acc, &self.mul(&self.int(2), &self.mul(&damp, &cos)));
            k += 1;
        }
        self.mul(&prefactor, &acc)
    }
}

fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let mut cc = Consts::new().expect("constant cache");
    x.format(Radix::Dec, RoundingMode::ToEven, &mut cc)
        .ok()
        .and_then(|s| s.parse::<f64>().ok())
        .unwrap_or(f64::NAN)
}

/// Heat trace of a lattice-only spectrum through Poisson summation.
///
/// Independent of [`Spectrum::heat_trace`]. Full lattices are transformed
/// directly. One-sided lattices are reduced to full ones either by the
/// reflection symmetry available when `2θ/c` is an integer, or by pairing
/// with a one-sided family of opposite shift, equal scale and multiplicity.
///
/// These reductions subtract terms of order one from sums of order one, so
/// the transform is carried out with `128 + t·Λ/ln 2` bits, `Λ` bounding the
/// eigenvalues involved, and rounded to `f64` once at the end.
pub fn heat_trace_theta_oracle(spec: &Spectrum, t: f64, include_kernel: bool) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(format!("heat trace requires t > 0, got {t}")));
    }
    let mut lattices = Vec::new();
    for family in spec.families() {
        match family {
            EigenFamily::Lattice(l) => lattices.push(*l),
            EigenFamily::Explicit(_) => {
                return Err(Error::Unsupported(
                    "theta oracle accepts lattice families only".into(),
                ))
            }
        }
    }
    let lambda = lattices
        .iter()
        .map(|l| (2.0 * l.scale + 2.0 * l.shift.abs()).powi(2))
        .fold(0.0, f64::max);
    let bits = 128.0 + (t * lambda).min(2000.0) / std::f64::consts::LN_2;
    let mut x = Ext::new(bits.ceil() as usize)?;
    let tt = x.num(t);
    let mut used = vec![false; lattices.len()];
    let mut total = x.int(0);
    for i in 0..lattices.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let l = lattices[i];
        let c = x.num(l.scale);
        let theta = x.num(l.shift);
        // Every branch below includes the structural zero mode (value 1).
        let value = match l.side {
            LatticeSide::Full => x.theta_full(&tt, &c, &theta),
            LatticeSide::Positive => {
                let ratio = 2.0 * l.shift / l.scale;
                if ratio == ratio.round() {
                    let m = ratio as i64;
                    let full = x.theta_full(&tt, &c, &theta);
                    let half = x.num(0.5);
                    if m >= 0 {
                        // n ↦ -n-m maps n ≥ 1 onto n ≤ -m-1; the rest is -m..=0.
                        let mut middle = x.int(0);
                        for n in -m..=0 {
                            let g = x.gauss(&tt, &c, &theta, n);
                            middle = x.add(&middle, &g);
                        }
                        x.mul(&half, &x.sub(&full, &middle))
                    } else {
                        // Σ_{n≤0} equals the one-sided sum minus its first |m|-1 terms.
                        let mut overlap = x.int(0);
                        for n in 1..-m {
                            let g = x.gauss(&tt, &c, &theta, n);
                            overlap = x.add(&overlap, &g);
                        }
                        x.mul(&half, &x.add(&full, &overlap))
                    }
                } else {
                    let partner = (i + 1..lattices.len()).find(|&j| {
                        let o = lattices[j];
                        !used[j]
                            && o.side == LatticeSide::Positive
                            && o.scale == l.scale
                            && o.shift == -l.shift
                            && o.multiplicity == l.multiplicity
                    });
                    let Some(j) = partner else {
                        return Err(Error::Unsupported(format!(
                            "one-sided lattice with shift {} has no closed theta form and no mirrored partner",
                            l.shift
                        )));
                    };
                    used[j] = true;
                    // (cn - θ)² and (cn + θ)² over n ≥ 1 make the full lattice minus n = 0.
                    let full = x.theta_full(&tt, &c, &theta);
                    let g = x.gauss(&tt, &c, &theta, 0);
                    x.sub(&full, &g)
                }
            }
        };
        total = x.add(&total, &x.mul(&x.int(l.multiplicity as i64), &value));
    }
    let structural: usize = lattices.iter().map(|l| l.structural_kernel()).sum();
    total = x.sub(&total, &x.int(structural as i64));
    if include_kernel {
        total = x.add(&total, &x.int(spec.kernel_dim() as i64));
    }
    Ok(to_f64(&total))
}

/// JSON description of a spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumDescription {
    pub families: Vec<FamilyDescription>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FamilyDescription {
    #[serde(rename = "lattice")]
    Lattice {
        #[serde(default = "default_scale")]
        scale: f64,
        shift: f64,
        side: LatticeSide,
        mult: u32,
        #[serde(default)]
        shift_derivative: f64,
    },
    #[serde(rename = "explicit")]
    Explicit { values: Vec<ModeDescription> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeDescription {
    pub eigenvalue: f64,
    pub mult: u32,
    #[serde(default)]
    pub derivative: f64,
}

fn default_scale() -> f64 {
    TAU
}

impl SpectrumDescription {
    /// `kernel_dim`, when given, is the total number of zero modes; it may
    /// exceed the structural count, never undercut it.
    pub fn build(&self) -> Result<Spectrum> {
        let families = self
            .families
            .iter()
            .map(|f| match f {
                FamilyDescription::Lattice {
                    scale,
                    shift,
                    side,
                    mult,
                    shift_derivative,
                } => Ok(EigenFamily::Lattice(Lattice::new(
                    *scale,
                    *shift,
                    *side,
                    *mult,
                    *shift_derivative,
                )?)),
                FamilyDescription::Explicit { values } => Ok(EigenFamily::Explicit(
                    values
                        .iter()
                        .map(|m| ExplicitMode {
                            eigenvalue: m.eigenvalue,
                            multiplicity: m.mult,
                            derivative: m.derivative,
                        })
                        .collect(),
                )),
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = Spectrum::new(families, 0)?;
        match self.kernel_dim {
            None => Ok(spec),
            Some(declared) => {
                let structural = spec.kernel_dim();
                if declared < structural {
                    return Err(domain(format!(
                        "kernel_dim {declared} is smaller than the {structural} structural zero modes"
                    )));
                }
                Ok(Spectrum {
                    free_kernel: spec.free_kernel + declared - structural,
                    ..spec
                })
            }
        }
    }

    pub fn describe(spec: &Spectrum) -> Self {
        let families = spec
            .families()
            .iter()
            .map(|f| match f {
                EigenFamily::Lattice(l) => FamilyDescription::Lattice {
                    scale: l.scale,
                    shift: l.shift,
                    side: l.side,
                    mult: l.multiplicity,
                    shift_derivative: l.shift_derivative,
                },
                EigenFamily::Explicit(modes) => FamilyDescription::Explicit {
                    values: modes
                        .iter()
                        .map(|m| ModeDescription {
                            eigenvalue: m.eigenvalue,
                            mult: m.multiplicity,
                            derivative: m.derivative,
                        })
                        .collect(),
                },
            })
            .collect();
        Self {
            families,
            kernel_dim: Some(spec.kernel_dim()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn finite_spectrum_examples() {
        let s = finite_spectrum(&[(1.0, 1, 0.0)]).unwrap();
        assert_eq!(s.min_positive_eigenvalue(), 1.0);
        assert_eq!(s.kernel_dim(), 0);
        let s = finite_spectrum(&[(0.0, 2, 0.0), (3.0, 1, 0.0)]).unwrap();
        assert_eq!(s.kernel_dim(), 2);
        assert_eq!(s.finite_dimension(), Some(1));
        let s = finite_spectrum(&[(2.0, 1, 0.0), (3.0, 1, 0.0)]).unwrap();
        let h = s.heat_trace(1.0, tol(), false).unwrap();
        assert!((h - ((-2.0f64).exp() + (-3.0f64).exp())).abs() < 1e-16);
        assert!(finite_spectrum(&[(-1.0, 1, 0.0)]).is_err());
    }

    #[test]
    fn lattice_kernel_rules() {
        let s = lattice_family(TAU, 0.0, LatticeSide::Positive, 1, 0.0).unwrap();
        assert_eq!(s.kernel_dim(), 0);
        assert!((s.min_positive_eigenvalue() - TAU * TAU).abs() < 1e-12);
        let s = lattice_family(TAU, PI, LatticeSide::Full, 1, 0.0).unwrap();
        assert_eq!(s.kernel_dim(), 0);
        assert!((s.min_positive_eigenvalue() - PI * PI).abs() < 1e-12);
        let s = lattice_family(TAU, 0.0, LatticeSide::Full, 1, 0.0).unwrap();
        assert_eq!(s.kernel_dim(), 1);
        let s = lattice_family(TAU, -TAU, LatticeSide::Positive, 3, 0.0).unwrap();
        assert_eq!(s.kernel_dim(), 3);
    }

    #[test]
    fn heat_trace_examples() {
        let s = finite_spectrum(&[(1.0, 1, 0.0), (2.0, 1, 0.0)]).unwrap();
        assert!((s.heat_trace(1.0, tol(), false).unwrap() - 0.503_214_724_408_055).abs() < 1e-15);
        let s = lattice_family(TAU, 0.0, LatticeSide::Positive, 1, 0.0).unwrap();
        let h = s.heat_trace(0.01, tol(), false).unwrap();
        assert!((h - 0.910_473_959).abs() < 1e-9, "{h}");
        assert!(s.heat_trace(50.0, tol(), false).unwrap() < 1e-100);
        assert!(s.heat_trace(0.0, tol(), false).is_err());
    }

    #[test]
    fn theta_oracle_examples() {
        let full = lattice_family(TAU, 0.0, LatticeSide::Full, 1, 0.0).unwrap();
        let v = heat_trace_theta_oracle(&full, 0.01, true).unwrap();
        assert!((v - 2.820_947_918).abs() < 1e-9);
        let half = lattice_family(TAU, 0.0, LatticeSide::Positive, 1, 0.0).unwrap();
        let v = heat_trace_theta_oracle(&half, 0.01, false).unwrap();
        assert!((v - 0.910_473_959).abs() < 1e-9);
        let lone = lattice_family(TAU, 0.3, LatticeSide::Positive, 1, 0.0).unwrap();
        assert!(matches!(
            heat_trace_theta_oracle(&lone, 0.1, false),
            Err(Error::Unsupported(_))
        ));
        let finite = finite_spectrum(&[(1.0, 1, 0.0)]).unwrap();
        assert!(heat_trace_theta_oracle(&finite, 0.1, false).is_err());
    }

    #[test]
    fn kernel_inclusion_adds_kernel_dim() {
        let s = lattice_family(TAU, 0.0, LatticeSide::Full, 2, 0.0).unwrap();
        let with = s.heat_trace(0.3, tol(), true).unwrap();
        let without = s.heat_trace(0.3, tol(), false).unwrap();
        assert!((with - without - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cutoff_tail_is_below_tolerance() {
        let l = Lattice::new(TAU, 0.4, LatticeSide::Full, 2, 0.0).unwrap();
        for t in [1e-4, 1e-2, 1.0] {
            let n = l.cutoff(t, 1e-15, |_| 1.0);
            let tail: f64 = (n + 1..n + 2000)
                .map(|k| {
                    let a = TAU * k as f64 + 0.4;
                    let b = -TAU * k as f64 + 0.4;
                    2.0 * ((-t * a * a).exp() + (-t * b * b).exp())
                })
                .sum();
            assert!(tail <= 1e-15, "t={t}, n={n}, tail={tail:e}");
        }
    }

    #[test]
    fn scaling_and_direct_sum() {
        let a = lattice_family(TAU, 0.5, LatticeSide::Positive, 1, 1.0).unwrap();
        let b = finite_spectrum(&[(3.0, 2, 0.0)]).unwrap();
        let c = a.direct_sum(&b);
        let t = 0.2;
        let sum = a.heat_trace(t, tol(), false).unwrap() + b.heat_trace(t, tol(), false).unwrap();
        assert!((c.heat_trace(t, tol(), false).unwrap() - sum).abs() < 1e-13);
        let scaled = a.scaled(4.0).unwrap();
        let lhs = scaled.heat_trace(t, tol(), false).unwrap();
        let rhs = a.heat_trace(4.0 * t, tol(), false).unwrap();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn description_round_trip_and_kernel_declaration() {
        let json = r#"{"families":[{"kind":"lattice","scale":6.283185307179586,"shift":0.0,"side":"positive","mult":1,"shift_derivative":0.0}],"kernel_dim":0}"#;
        let desc: SpectrumDescription = serde_json::from_str(json).unwrap();
        let spec = desc.build().unwrap();
        assert_eq!(
            spec,
            lattice_family(TAU, 0.0, LatticeSide::Positive, 1, 0.0).unwrap()
        );
        assert_eq!(SpectrumDescription::describe(&spec), desc);

        let json = r#"{"families":[{"kind":"lattice","shift":0.0,"side":"full","mult":1}],"kernel_dim":0}"#;
        let desc: SpectrumDescription = serde_json::from_str(json).unwrap();
        assert!(desc.build().is_err());
        let json = r#"{"families":[{"kind":"explicit","values":[{"eigenvalue":2.0,"mult":1}]}],"kernel_dim":3}"#;
        let desc: SpectrumDescription = serde_json::from_str(json).unwrap();
        assert_eq!(desc.build().unwrap().kernel_dim(), 3);
    }

    #[test]
    fn heat_trace_variation_matches_finite_difference() {
        let at = |theta: f64| lattice_family(TAU, theta, LatticeSide::Positive, 2, 1.0).unwrap();
        let t = 0.05;
        let h = 1e-5;
        let fd = (at(0.3 + h).heat_trace(t, tol(), false).unwrap()
            - at(0.3 - h).heat_trace(t, tol(), false).unwrap())
            / (2.0 * h);
        let analytic = at(0.3).heat_trace_variation(t, tol()).unwrap();
        assert!((fd - analytic).abs() < 1e-8, "{fd} vs {analytic}");
    }
}
