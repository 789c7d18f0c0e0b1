//! Log-domain Gamma/Beta helpers over complex arguments.

use num_complex::Complex64;
use std::f64::consts::PI;

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

/// Principal-ish branch of ln Γ(z). Only `exp` of the result is meaningful
/// across branch cuts.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection
        let s = (Complex64::from(PI) * z).sin();
        return Complex64::from(PI.ln()) - s.ln() - ln_gamma(Complex64::from(1.0) - z);
    }
    if z.norm() > 20.0 {
        return stirling(z);
    }
    let z = z - 1.0;
    let mut acc = Complex64::from(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Complex64::from(0.5 * (2.0 * PI).ln()) + (z + 0.5) * t.ln() - t + acc.ln()
}

fn stirling(z: Complex64) -> Complex64 {
    // Bernoulli terms B_{2k}/(2k(2k-1) z^{2k-1})
    const B: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let mut series = Complex64::from(0.0);
    let zi = z.inv();
    let zi2 = zi * zi;
    let mut p = zi;
    for b in B {
        series += p * b;
        p *= zi2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + series
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// ln|Γ(x)| and the sign of Γ(x) for real x (x not a non-positive integer).
pub fn ln_gamma_real(x: f64) -> (f64, f64) {
    let lg = ln_gamma(Complex64::from(x)).re;
    let sign = if x > 0.0 || (x.floor() as i64).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    // Γ(x) for x in (-1,0) is negative: floor = -1 (odd) gives -1.
    (lg, sign)
}

pub fn ln_beta(a: Complex64, b: Complex64) -> Complex64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// True when z sits on a pole of Γ.
pub fn is_gamma_pole(z: Complex64) -> bool {
    z.im.abs() < 1e-14 && z.re <= 0.0 && (z.re - z.re.round()).abs() < 1e-12
}

pub fn ln_factorial(k: usize) -> f64 {
    ln_gamma(Complex64::from(k as f64 + 1.0)).re
}

/// ∏_{k<l} (x_l − x_k) as (sign, ln|·|).
pub fn log_vandermonde(x: &[f64]) -> (f64, f64) {
    let mut sign = 1.0;
    let mut log = 0.0;
    for l in 0..x.len() {
        for k in 0..l {
            let d = x[l] - x[k];
            if d == 0.0 {
                return (0.0, f64::NEG_INFINITY);
            }
            if d < 0.0 {
                sign = -sign;
            }
            log += d.abs().ln();
        }
    }
    (sign, log)
}

/// Complex Vandermonde ∏_{k<l}(x_l − x_k).
pub fn vandermonde_c(x: &[Complex64]) -> Complex64 {
    let mut p = Complex64::from(1.0);
    for l in 0..x.len() {
        for k in 0..l {
            p *= x[l] - x[k];
        }
    }
    p
}
