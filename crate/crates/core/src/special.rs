//! Scalar special functions: E1, Gamma, the Euler constant, Bernoulli
//! polynomials and a Hurwitz zeta oracle.
//!
//! The Hurwitz zeta routines exist to check the determinant code against
//! closed forms. Nothing on a production determinant path calls them.

use crate::error::{domain, Error, Result};
use crate::quad::gauss_kronrod;
use crate::sum::compensated_sum;
use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_431;

/// `0.5 * ln(2π)`.
pub const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_405_617_6;

/// Absolute and relative tolerance pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        if !(abs_tol > 0.0 && abs_tol.is_finite()) || !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(domain(format!(
                "tolerances must be strictly positive, got abs_tol={abs_tol:e}, rel_tol={rel_tol:e}"
            )));
        }
        Ok(Self { abs_tol, rel_tol })
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
        }
    }
}

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Power series below 1, modified Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(domain(format!("E1 requires x > 0, got {x}")));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x < 1.0 {
        Ok(e1_series(x))
    } else {
        Ok(e1_continued_fraction(x))
    }
}

fn e1_series(x: f64) -> f64 {
    // E1(x) = -γ - ln x + Σ_{k≥1} (-1)^{k+1} x^k / (k·k!)
    let mut power = -1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        power *= -x / k as f64;
        let term = power / k as f64;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

fn e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}

/// `log h_ε(λ) = -∫_ε^∞ e^{-tλ}/t dt = -E1(ελ)`.
pub fn log_h_eps(lambda: f64, eps: f64) -> Result<f64> {
    if !(lambda > 0.0) || !(eps > 0.0) {
        return Err(domain(format!(
            "log h_eps requires lambda > 0 and eps > 0, got lambda={lambda}, eps={eps}"
        )));
    }
    Ok(-exp_integral_e1(eps * lambda)?)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_series(z: f64) -> f64 {
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

/// `sin(πx)` with exact reduction of the integer part.
fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let frac = x - n;
    let s = (PI * frac).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

fn is_nonpositive_integer(s: f64) -> bool {
    s <= 0.0 && s == s.round()
}

/// Gamma function on the real line, Lanczos approximation with reflection.
pub fn gamma_fn(s: f64) -> Result<f64> {
    if s.is_nan() || is_nonpositive_integer(s) {
        return Err(domain(format!("Gamma has a pole at s = {s}")));
    }
    if s < 0.5 {
        let denom = sin_pi(s) * gamma_fn(1.0 - s)?;
        return Ok(PI / denom);
    }
    let z = s - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_series(z))
}

/// `ln Γ(s)` for `s > 0`.
pub fn ln_gamma(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(domain(format!("ln Gamma requires s > 0, got {s}")));
    }
    if s < 0.5 {
        return Ok(ln_gamma(s + 1.0)? - s.ln());
    }
    let z = s - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(HALF_LN_2PI + (z + 0.5) * t.ln() - t + lanczos_series(z).ln())
}

/// The two integrals of the split `γ = ∫_0^1 (1-e^{-t})/t dt - ∫_1^∞ e^{-t}/t dt`,
/// each evaluated by adaptive quadrature.
pub fn euler_gamma_integral_split() -> (f64, f64) {
    const TOL: f64 = 1e-14;
    const UPPER: f64 = 60.0;
    let near = gauss_kronrod(
        |t: f64| if t == 0.0 { 1.0 } else { -(-t).exp_m1() / t },
        0.0,
        1.0,
        TOL,
        0.0,
    )
    .expect("smooth integrand on [0, 1]");
    let knees = [1.0, 4.0, 16.0, UPPER];
    let far = knees
        .windows(2)
        .map(|w| {
            gauss_kronrod(|t: f64| (-t).exp() / t, w[0], w[1], TOL, 0.0)
                .expect("smooth integrand")
                .value
        })
        .sum::<f64>();
    // ∫_60^∞ e^{-t}/t < e^{-60}/60 ≈ 1.5e-28; below resolution.
    (near.value, far)
}

/// Euler constant from its integral representation.
pub fn euler_gamma_integral() -> f64 {
    let (near, far) = euler_gamma_integral_split();
    near - far
}

/// Euler constant from `lim (H_n - ln n)` with the asymptotic correction
/// `-1/(2n) + 1/(12n²) - 1/(120n⁴) + 1/(252n⁶) - 1/(240n⁸)`.
pub fn euler_gamma_series() -> f64 {
    let n = 10_000u32;
    let nf = n as f64;
    let harmonic = compensated_sum((1..=n).rev().map(|k| 1.0 / k as f64));
    let inv2 = 1.0 / (nf * nf);
    let correction =
        -0.5 / nf + inv2 / 12.0 - inv2 * inv2 / 120.0 + inv2.powi(3) / 252.0 - inv2.powi(4) / 240.0;
    harmonic - nf.ln() + correction
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Bernoulli numbers `B_0 ..= B_n` (with `B_1 = -1/2`), `n ≤ 30`.
///
/// The recurrence `B_m = -1/(m+1) Σ_{k<m} C(m+1, k) B_k` is run in exact
/// rational arithmetic; it loses digits quickly in floating point.
pub fn bernoulli_numbers(n: usize) -> Vec<f64> {
    assert!(n <= 30, "Bernoulli numbers are tabulated up to index 30");
    let mut b: Vec<(i128, i128)> = vec![(0, 1); n + 1];
    b[0] = (1, 1);
    for m in 1..=n {
        if m > 1 && m % 2 == 1 {
            continue;
        }
        let mut binom: i128 = 1;
        let (mut num, mut den): (i128, i128) = (0, 1);
        for (k, &(bn, bd)) in b.iter().enumerate().take(m) {
            if bn != 0 {
                // num/den + binom·bn/bd
                let g = gcd(den, bd);
                num = num * (bd / g) + binom * bn * (den / g);
                den = den / g * bd;
                let r = gcd(num, den).max(1);
                num /= r;
                den /= r;
            }
            binom = binom * (m + 1 - k) as i128 / (k + 1) as i128;
        }
        let den = den * (m + 1) as i128;
        let r = gcd(num, den).max(1);
        b[m] = (-num / r, den / r);
    }
    b.iter().map(|&(p, q)| p as f64 / q as f64).collect()
}

/// Bernoulli polynomial `B_n(x) = Σ_k C(n, k) B_k x^{n-k}`.
pub fn bernoulli_polynomial(n: usize, x: f64) -> f64 {
    let b = bernoulli_numbers(n);
    let mut binom = 1.0;
    let mut acc = 0.0;
    for (k, bk) in b.iter().enumerate() {
        if *bk != 0.0 {
            acc += binom * bk * x.powi((n - k) as i32);
        }
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    acc
}

// B_2, B_4, ..., B_16
const EVEN_BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Hurwitz zeta `ζ_H(s, q) = Σ_{n≥0} (n+q)^{-s}`, continued to `s ≠ 1`.
///
/// Test oracle: Euler–Maclaurin with 16 explicit terms and Bernoulli
/// corrections through `B_16`.
pub fn hurwitz_zeta(s: f64, q: f64) -> Result<f64> {
    if s == 1.0 {
        return Err(Error::Pole {
            s,
            reason: "Hurwitz zeta has a simple pole at s = 1".into(),
        });
    }
    if !(q > 0.0) || !s.is_finite() {
        return Err(domain(format!(
            "Hurwitz zeta requires q > 0 and finite s, got s={s}, q={q}"
        )));
    }
    const N: usize = 16;
    let head = compensated_sum((0..N).map(|n| (n as f64 + q).powf(-s)));
    let a = N as f64 + q;
    let mut tail = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising factorial s(s+1)...(s+2k-2) / (2k)!
    let mut rising = s;
    let mut factorial = 2.0;
    for (k, b2k) in EVEN_BERNOULLI.iter().enumerate() {
        let k = k + 1;
        tail += b2k / factorial * rising * a.powf(-s - (2 * k) as f64 + 1.0);
        let next = 2 * k;
        rising *= (s + next as f64 - 1.0) * (s + next as f64);
        factorial *= ((next + 1) * (next + 2)) as f64;
    }
    Ok(head + tail)
}

/// `∂_s ζ_H(s, q)` at `s = 0`, from Lerch's formula `ln Γ(q) - ½ ln 2π`.
pub fn hurwitz_zeta_prime0(q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(domain(format!("Lerch formula requires q > 0, got {q}")));
    }
    Ok(ln_gamma(q)? - HALF_LN_2PI)
}
