//! Gamma and digamma functions.
//!
//! Gamma uses the Lanczos approximation with `g = 7` and nine coefficients,
//! reflected for `x < 1/2`. Positive integers up to 171 are computed as exact
//! factorial products so that `gamma(1) == 1` holds bit-for-bit.

use crate::error::{Error, Result};
use crate::real::Real;

const POLE_TOL: f64 = 1e-14;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
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

fn check_pole<T: Real>(x: T) -> Result<()> {
    if x <= T::zero() && (x - x.round()).abs() <= T::lit(POLE_TOL) {
        return Err(Error::Pole { x: x.as_f64() });
    }
    Ok(())
}

/// Euler's gamma function.
pub fn gamma<T: Real>(x: T) -> Result<T> {
    if x.is_nan() {
        return Err(Error::Domain("gamma of NaN".into()));
    }
    check_pole(x)?;
    if x >= T::one() && x <= T::lit(171.0) && x == x.round() {
        let n = x.to_usize().unwrap_or(1);
        let mut acc = T::one();
        for k in 2..n {
            acc = acc * T::from_count(k);
        }
        return Ok(acc);
    }
    if x < T::lit(0.5) {
        let pi = T::PI();
        let s = (pi * x).sin();
        return Ok(pi / (s * lanczos(T::one() - x)));
    }
    Ok(lanczos(x))
}

fn lanczos<T: Real>(x: T) -> T {
    let x = x - T::one();
    let mut acc = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::lit(c) / (x + T::from_count(i));
    }
    let w = x + T::lit(LANCZOS_G + 0.5);
    // w^(x+1/2) split in two halves so large arguments do not overflow early
    let half = w.powf((x + T::lit(0.5)) * T::lit(0.5));
    T::lit((2.0 * std::f64::consts::PI).sqrt()) * half * ((-w).exp() * half) * acc
}

/// Logarithmic derivative of the gamma function.
pub fn digamma<T: Real>(x: T) -> Result<T> {
    if x.is_nan() {
        return Err(Error::Domain("digamma of NaN".into()));
    }
    check_pole(x)?;
    if x < T::zero() {
        let pi = T::PI();
        return Ok(digamma(T::one() - x)? - pi / (pi * x).tan());
    }
    let mut x = x;
    let mut acc = T::zero();
    while x < T::lit(10.0) {
        acc = acc - x.recip();
        x = x + T::one();
    }
    let inv2 = (x * x).recip();
    // Bernoulli tail: sum_k B_{2k} / (2k x^{2k})
    let tail = inv2
        * (T::lit(1.0 / 12.0)
            - inv2
                * (T::lit(1.0 / 120.0)
                    - inv2
                        * (T::lit(1.0 / 252.0)
                            - inv2
                                * (T::lit(1.0 / 240.0)
                                    - inv2 * (T::lit(1.0 / 132.0) - inv2 * T::lit(691.0 / 32760.0))))));
    Ok(acc + x.ln() - T::lit(0.5) / x - tail)
}
