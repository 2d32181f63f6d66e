//! Numerical quadrature on finite intervals.
//!
//! Two independent rules are provided: an adaptive Gauss–Kronrod (7, 15)
//! scheme and a tanh-sinh (double exponential) scheme with level doubling.
//! The heat-kernel determinant uses the latter, the zeta-function route the
//! former, so the two sides of the bridge identity never share a rule.

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;
use std::f64::consts::FRAC_PI_2;

/// Value of an integral together with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn zero() -> Self {
        Self {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        }
    }
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, rhs: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
            evaluations: self.evaluations + rhs.evaluations,
        }
    }
}

// Kronrod abscissae; odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    resabs: f64,
}

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_kronrod = kronrod.abs();
    let mut samples = [0.0f64; 15];
    samples[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        samples[j] = f1;
        samples[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_kronrod += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    if !kronrod.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite integrand on [{a:e}, {b:e}]"
        )));
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((samples[j] - mean).abs() + (samples[14 - j] - mean).abs());
    }
    let value = kronrod * half;
    let resabs = abs_kronrod * half.abs();
    let resasc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if floor > error {
        error = floor;
    }
    Ok(Segment {
        a,
        b,
        value,
        error,
        resabs,
    })
}

/// Adaptive Gauss–Kronrod (7, 15) quadrature of `f` over `[a, b]`.
///
/// Bisects the segment with the largest error estimate until the total
/// estimate falls under `max(abs_tol, rel_tol * |value|)`, or under the
/// roundoff level of `∫|f|` when the requested tolerance is finer than that.
pub fn gauss_kronrod<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    const MAX_SEGMENTS: usize = 2000;
    if a == b {
        return Ok(QuadResult::zero());
    }
    let mut segments = vec![kronrod15(&mut f, a, b)?];
    let mut evaluations = 15;
    loop {
        let value = segments
            .iter()
            .map(|s| s.value)
            .collect::<CompensatedSum>()
            .total();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let roundoff = 100.0 * f64::EPSILON * segments.iter().map(|s| s.resabs).sum::<f64>();
        if error <= abs_tol.max(rel_tol * value.abs()).max(roundoff) {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }
        if segments.len() >= MAX_SEGMENTS {
            return Err(Error::Numeric(format!(
                "Gauss-Kronrod did not converge on [{a:e}, {b:e}]: value {value:e}, error {error:e} after {evaluations} evaluations"
            )));
        }
        let (worst, _) =
            segments
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, be), (i, s)| {
                    if s.error > be {
                        (i, s.error)
                    } else {
                        (bi, be)
                    }
                });
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) {
            return Err(Error::Numeric(format!(
                "Gauss-Kronrod segment [{:e}, {:e}] cannot be bisected further",
                seg.a, seg.b
            )));
        }
        segments.push(kronrod15(&mut f, seg.a, mid)?);
        segments.push(kronrod15(&mut f, mid, seg.b)?);
        evaluations += 30;
    }
}

/// Tanh-sinh quadrature of `f` over the finite interval `[a, b]`.
///
/// The step is halved until two successive levels agree to
/// `max(abs_tol, rel_tol * |value|)` or to the roundoff level of `∫|f|`;
/// the reported error is that difference.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    const T_MAX: f64 = 4.5;
    const MIN_LEVEL: u32 = 3;
    const MAX_LEVEL: u32 = 12;
    if a == b {
        return Ok(QuadResult::zero());
    }
    let width = b - a;
    let half = 0.5 * width;

    let h0 = 0.5;
    let mut acc = CompensatedSum::new();
    let center = FRAC_PI_2 * f(0.5 * (a + b));
    acc.add(center);
    let mut magnitude = center.abs();
    // Weighted contribution of the node pair at +t / -t, and its magnitude.
    let mut pair = |t: f64| -> (f64, f64) {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        // distance of the node from the nearest endpoint
        let d = width / (1.0 + (2.0 * u).exp());
        let (fa, fb) = (f(a + d), f(b - d));
        (w * (fa + fb), w * (fa.abs() + fb.abs()))
    };

    let mut evaluations = 1;
    let mut k = 1;
    while k as f64 * h0 <= T_MAX {
        let (v, m) = pair(k as f64 * h0);
        acc.add(v);
        magnitude += m;
        evaluations += 2;
        k += 1;
    }
    let mut previous = half * h0 * acc.total();
    let mut h = h0;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= T_MAX {
            let (v, m) = pair(k as f64 * h);
            acc.add(v);
            magnitude += m;
            evaluations += 2;
            k += 2;
        }
        let current = half * h * acc.total();
        if !current.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite tanh-sinh estimate on [{a:e}, {b:e}]"
            )));
        }
        let diff = (current - previous).abs();
        let roundoff = 100.0 * f64::EPSILON * half * h * magnitude;
        if level >= MIN_LEVEL && diff <= abs_tol.max(rel_tol * current.abs()).max(roundoff) {
            return Ok(QuadResult {
                value: current,
                error: diff.max(4.0 * f64::EPSILON * current.abs()),
                evaluations,
            });
        }
        previous = current;
    }
    Err(Error::Numeric(format!(
        "tanh-sinh did not converge on [{a:e}, {b:e}] after {evaluations} evaluations (last estimate {previous:e})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomial_is_exact() {
        let r = gauss_kronrod(|x| 3.0 * x * x - 2.0 * x + 1.0, -1.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((r.value - 9.0).abs() < 1e-13, "{r:?}");
    }

    #[test]
    fn gauss_kronrod_adapts_to_sharp_peak() {
        let r = gauss_kronrod(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 0.0).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() < 1e-9, "{} vs {}", r.value, exact);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        let r = tanh_sinh(|x: f64| x.ln(), 0.0, 1.0, 1e-13, 0.0).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12, "{r:?}");
        let r = tanh_sinh(|x: f64| 1.0 / x.sqrt(), 0.0, 4.0, 1e-13, 0.0).unwrap();
        assert!((r.value - 4.0).abs() < 1e-11, "{r:?}");
    }

    #[test]
    fn rules_agree_on_smooth_integrand() {
        let f = |x: f64| (-x * x).exp() * x.cos();
        let g = gauss_kronrod(f, -2.0, 3.0, 1e-14, 0.0).unwrap();
        let t = tanh_sinh(f, -2.0, 3.0, 1e-14, 0.0).unwrap();
        assert!((g.value - t.value).abs() < 1e-13);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        assert!(gauss_kronrod(|_| f64::NAN, 0.0, 1.0, 1e-10, 0.0).is_err());
        assert!(tanh_sinh(|_| f64::INFINITY, 0.0, 1.0, 1e-10, 0.0).is_err());
    }
}
