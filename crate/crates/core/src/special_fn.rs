//! Digamma, log-Gamma, dilogarithm, generalized binomial coefficients and the
//! zeta constants needed by the closed-form bias expressions.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const ZETA2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
pub const ZETA3: f64 = 1.202_056_903_159_594_3;
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialConstants<S> {
    pub zeta2: S,
    pub zeta3: S,
    pub euler_gamma: S,
}

impl<S: Real> SpecialConstants<S> {
    pub fn new() -> Self {
        Self { zeta2: S::lit(ZETA2), zeta3: S::lit(ZETA3), euler_gamma: S::lit(EULER_GAMMA) }
    }
}

impl<S: Real> Default for SpecialConstants<S> {
    fn default() -> Self {
        Self::new()
    }
}

fn is_nonpositive_integer<S: Real>(x: S) -> bool {
    x <= S::zero() && x == x.round()
}

/// Digamma function Ψ(x) = d/dx log Γ(x).
pub fn digamma<S: Real>(x: S) -> Result<S> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("digamma of {x:?}")));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole { func: "digamma", at: x.to_f64().unwrap_or(f64::NAN) });
    }
    if x < S::zero() {
        // reflection: Ψ(1−x) − Ψ(x) = π cot(πx)
        let pi = S::PI();
        return Ok(digamma(S::one() - x)? - pi / (pi * x).tan());
    }
    let mut x = x;
    let mut acc = S::zero();
    let ten = S::lit(10.0);
    while x < ten {
        acc = acc - x.recip();
        x = x + S::one();
    }
    let z = (x * x).recip();
    // Bernoulli tail B_{2k}/(2k) in powers of 1/x²
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
    ];
    let mut series = S::zero();
    for c in C.iter().rev() {
        series = (series + S::lit(*c)) * z;
    }
    Ok(acc + x.ln() - (S::lit(2.0) * x).recip() - series)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// log|Γ(x)| together with the sign of Γ(x).
pub fn ln_gamma_signed<S: Real>(x: S) -> Result<(S, S)> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma of {x:?}")));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole { func: "gamma", at: x.to_f64().unwrap_or(f64::NAN) });
    }
    let half = S::lit(0.5);
    if x < half {
        // Γ(x)Γ(1−x) = π / sin(πx)
        let s = (S::PI() * x).sin();
        let (lg, sg) = ln_gamma_signed(S::one() - x)?;
        let sign = if s < S::zero() { -sg } else { sg };
        return Ok((S::PI().ln() - s.abs().ln() - lg, sign));
    }
    let x = x - S::one();
    let mut a = S::lit(LANCZOS[0]);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + S::lit(*c) / (x + S::from_usize_lossy(i));
    }
    let t = x + S::lit(LANCZOS_G) + half;
    let lg = half * (S::lit(2.0) * S::PI()).ln() + (x + half) * t.ln() - t + a.ln();
    Ok((lg, S::one()))
}

pub fn ln_gamma<S: Real>(x: S) -> Result<S> {
    ln_gamma_signed(x).map(|(v, _)| v)
}

/// Generalized binomial coefficient Γ(top+1) / (Γ(bottom+1) Γ(top−bottom+1)).
///
/// Integer arguments with `0 <= bottom <= top` use an exact product. A pole in
/// either denominator Gamma makes the coefficient zero; a pole in the numerator
/// is an error.
pub fn gen_binom<S: Real>(top: S, bottom: S) -> Result<S> {
    let (n, k) = (top, bottom);
    if n == n.round() && k == k.round() && k >= S::zero() && k <= n {
        let kk = k.to_usize().unwrap_or(0).min((n - k).to_usize().unwrap_or(0));
        let mut acc = S::one();
        for i in 0..kk {
            acc = acc * (n - S::from_usize_lossy(i)) / S::from_usize_lossy(i + 1);
        }
        return Ok(acc.round());
    }
    let one = S::one();
    if is_nonpositive_integer(n + one) {
        return Err(Error::Pole { func: "gen_binom", at: n.to_f64().unwrap_or(f64::NAN) });
    }
    if is_nonpositive_integer(k + one) || is_nonpositive_integer(n - k + one) {
        return Ok(S::zero());
    }
    let (a, sa) = ln_gamma_signed(n + one)?;
    let (b, sb) = ln_gamma_signed(k + one)?;
    let (c, sc) = ln_gamma_signed(n - k + one)?;
    Ok(sa * sb * sc * (a - b - c).exp())
}

// B_n / (n+1)! for the series Li2(x) = Σ B_n u^{n+1}/(n+1)!, u = −ln(1−x)
const DILOG_BERN: [f64; 12] = [
    1.0,
    -0.25,
    0.027_777_777_777_777_778,
    -0.000_277_777_777_777_777_78,
    4.724_111_866_969_009_8e-6,
    -9.185_773_074_661_963_6e-8,
    1.897_886_998_897_100e-9,
    -4.064_761_645_144_225_5e-11,
    8.921_691_020_456_452_6e-13,
    -1.993_929_586_072_107_6e-14,
    4.518_980_029_619_918_2e-16,
    -1.035_651_761_218_124_7e-17,
];

fn dilog_core<S: Real>(x: S) -> S {
    // valid for −1 ≤ x ≤ 1/2 where |u| ≤ ln 2
    let u = -(-x).ln_1p();
    let u2 = u * u;
    // odd-index term is only n = 1
    let mut even = S::zero();
    for c in DILOG_BERN[2..].iter().rev() {
        even = even * u2 + S::lit(*c);
    }
    u + S::lit(DILOG_BERN[1]) * u2 + even * u2 * u
}

/// Real dilogarithm Li2(x) = −∫_0^x ln(1−t)/t dt for x ≤ 1.
pub fn dilog<S: Real>(x: S) -> Result<S> {
    let one = S::one();
    if x.is_nan() || x > one {
        return Err(Error::Domain(format!("dilog needs x <= 1, got {x:?}")));
    }
    let z2 = S::lit(ZETA2);
    if x == one {
        return Ok(z2);
    }
    if x == S::zero() {
        return Ok(S::zero());
    }
    if x < -one {
        let l = (-x).ln();
        return Ok(-z2 - S::lit(0.5) * l * l - dilog_core(x.recip()));
    }
    if x > S::lit(0.5) {
        return Ok(z2 - x.ln() * (one - x).ln() - dilog_core(one - x));
    }
    Ok(dilog_core(x))
}
