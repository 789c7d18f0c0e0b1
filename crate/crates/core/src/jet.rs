//! Truncated Taylor series ("jets") in one variable with complex coefficients.
//! Used to evaluate confluent determinants and (−a∂_a)^k derivatives exactly.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// 1/z without the overflow/underflow of the naive |z|² formula.
pub fn cinv(z: Complex64) -> Complex64 {
    if z.re.abs() >= z.im.abs() {
        let r = z.im / z.re;
        let d = z.re + z.im * r;
        Complex64::new(1.0 / d, -r / d)
    } else {
        let r = z.re / z.im;
        let d = z.re * r + z.im;
        Complex64::new(r / d, -1.0 / d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub c: Vec<Complex64>,
}

impl Jet {
    pub fn constant(v: Complex64, order: usize) -> Self {
        let mut c = vec![Complex64::from(0.0); order + 1];
        c[0] = v;
        Jet { c }
    }

    /// x0 + t
    pub fn variable(x0: Complex64, order: usize) -> Self {
        let mut j = Jet::constant(x0, order);
        if order > 0 {
            j.c[1] = Complex64::from(1.0);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Jet { c: self.c.iter().map(|x| x * k).collect() }
    }

    pub fn add_scalar(&self, k: Complex64) -> Self {
        let mut r = self.clone();
        r.c[0] += k;
        r
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut b = vec![Complex64::from(0.0); n];
        b[0] = self.c[0].exp();
        for k in 1..n {
            let mut s = Complex64::from(0.0);
            for j in 1..=k {
                s += self.c[j] * b[k - j] * j as f64;
            }
            b[k] = s / k as f64;
        }
        Jet { c: b }
    }

    pub fn ln(&self) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        let ia0 = cinv(a0);
        let mut b = vec![Complex64::from(0.0); n];
        b[0] = a0.ln();
        for k in 1..n {
            let mut s = Complex64::from(0.0);
            for j in 1..k {
                s += b[j] * self.c[k - j] * j as f64;
            }
            b[k] = (self.c[k] - s / k as f64) * ia0;
        }
        Jet { c: b }
    }

    pub fn powc(&self, p: Complex64) -> Self {
        self.ln().scale(p).exp()
    }

    pub fn powf(&self, p: f64) -> Self {
        self.powc(Complex64::from(p))
    }

    pub fn powi(&self, k: usize) -> Self {
        let mut r = Jet::constant(Complex64::from(1.0), self.order());
        for _ in 0..k {
            r = &r * self;
        }
        r
    }

    pub fn recip(&self) -> Self {
        let n = self.c.len();
        let ia0 = cinv(self.c[0]);
        let mut b = vec![Complex64::from(0.0); n];
        b[0] = ia0;
        for k in 1..n {
            let mut s = Complex64::from(0.0);
            for j in 1..=k {
                s += self.c[j] * b[k - j];
            }
            b[k] = -s * ia0;
        }
        Jet { c: b }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    /// f(self) given the Taylor coefficients of f around self.value():
    /// `taylor[k] = f^{(k)}(x0)/k!`.
    pub fn compose(&self, taylor: &[Complex64]) -> Self {
        let order = self.order();
        let delta = self.add_scalar(-self.c[0]);
        let mut r = Jet::constant(Complex64::from(0.0), order);
        for k in (0..taylor.len().min(order + 1)).rev() {
            r = &r * &delta;
            r.c[0] += taylor[k];
        }
        r
    }

    /// Coefficients of d/dt.
    pub fn derivative(&self) -> Self {
        let n = self.c.len();
        let mut c = vec![Complex64::from(0.0); n];
        for k in 1..n {
            c[k - 1] = self.c[k] * k as f64;
        }
        Jet { c }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        Jet { c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        Jet { c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { c: self.c.iter().map(|a| -a).collect() }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        let mut c = vec![Complex64::from(0.0); n];
        for i in 0..n {
            if self.c[i] == Complex64::from(0.0) {
                continue;
            }
            for j in 0..n - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: f64) -> bool {
        (a - b).norm() < 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn exp_ln_roundtrip() {
        let x = Jet::variable(Complex64::from(0.7), 6);
        let y = x.exp().ln();
        for k in 0..=6 {
            assert!((y.c[k] - x.c[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn power_taylor_coefficients() {
        // (2 + t)^{1.5}: coefficients binom(1.5,k) 2^{1.5-k}
        let j = Jet::variable(Complex64::from(2.0), 3).powf(1.5);
        let want = [
            2f64.powf(1.5),
            1.5 * 2f64.powf(0.5),
            1.5 * 0.5 / 2.0 * 2f64.powf(-0.5),
            1.5 * 0.5 * -0.5 / 6.0 * 2f64.powf(-1.5),
        ];
        for k in 0..4 {
            assert!(close(j.c[k], want[k]), "{k}");
        }
    }

    #[test]
    fn recip_and_compose() {
        let x = Jet::variable(Complex64::from(3.0), 4);
        let r = &x.recip() * &x;
        assert!(close(r.c[0], 1.0));
        for k in 1..=4 {
            assert!(r.c[k].norm() < 1e-14);
        }
        // compose exp around x0: taylor of exp at 3 is e^3/k!
        let e3 = 3f64.exp();
        let tay: Vec<Complex64> = (0..5)
            .map(|k| Complex64::from(e3 / (1..=k).product::<usize>().max(1) as f64))
            .collect();
        let a = x.compose(&tay);
        let b = x.exp();
        for k in 0..=4 {
            assert!((a.c[k] - b.c[k]).norm() < 1e-12 * e3);
        }
    }
}
