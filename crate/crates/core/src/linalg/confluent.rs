//! Ratios det[F(r_b, c_c)] / (Δ(r) Δ(c)) that stay finite when points
//! coalesce: clustered rows/columns are replaced by Taylor coefficients.

use super::det::det_complex_scaled;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// mantissa · e^{log}, with |mantissa| = 1 (or 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub mantissa: Complex64,
    pub log: f64,
}

impl LogValue {
    pub fn new(mantissa: Complex64, log: f64) -> Self {
        let m = mantissa.norm();
        if m == 0.0 || !m.is_finite() {
            return LogValue { mantissa: Complex64::from(if m == 0.0 { 0.0 } else { f64::NAN }), log: 0.0 };
        }
        LogValue { mantissa: mantissa / m, log: log + m.ln() }
    }

    pub fn zero() -> Self {
        LogValue { mantissa: Complex64::from(0.0), log: 0.0 }
    }

    pub fn from_complex(z: Complex64) -> Self {
        LogValue::new(z, 0.0)
    }

    pub fn from_log_real(sign: f64, log: f64) -> Self {
        LogValue::new(Complex64::from(sign), log)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == Complex64::from(0.0)
    }

    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::from(0.0);
        }
        self.mantissa * self.log.exp()
    }

    pub fn to_real(&self) -> f64 {
        self.to_complex().re
    }

    pub fn mul(&self, o: &LogValue) -> LogValue {
        if self.is_zero() || o.is_zero() {
            return LogValue::zero();
        }
        LogValue { mantissa: self.mantissa * o.mantissa, log: self.log + o.log }
    }

    pub fn div(&self, o: &LogValue) -> LogValue {
        if self.is_zero() {
            return LogValue::zero();
        }
        LogValue { mantissa: self.mantissa / o.mantissa, log: self.log - o.log }
    }

    pub fn scale_log(&self, log: f64) -> LogValue {
        LogValue { log: self.log + log, ..*self }
    }
}

/// Points along one axis of the determinant. With `vandermonde = false`
/// the axis is not divided by a Vandermonde and is never clustered.
#[derive(Debug, Clone, Copy)]
pub struct AxisSpec<'a> {
    pub points: &'a [Complex64],
    pub vandermonde: bool,
    /// Relative distance below which points are merged.
    pub tol: f64,
}

impl<'a> AxisSpec<'a> {
    pub fn vandermonde(points: &'a [Complex64], tol: f64) -> Self {
        AxisSpec { points, vandermonde: true, tol }
    }

    pub fn plain(points: &'a [Complex64]) -> Self {
        AxisSpec { points, vandermonde: false, tol: 0.0 }
    }
}

struct Cluster {
    point: Complex64,
    size: usize,
}

fn clusters(points: &[Complex64], cluster: bool, tol: f64) -> Vec<Cluster> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    if cluster {
        for i in 0..n {
            for j in (i + 1)..n {
                let s = points[i].norm().max(points[j].norm());
                if (points[i] - points[j]).norm() <= tol * s {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[b.max(a)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut out: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match out.iter_mut().find(|c| c.0 == r) {
            Some(c) => {
                c.1 += points[i];
                c.2 += 1;
            }
            None => out.push((r, points[i], 1)),
        }
    }
    out.into_iter().map(|(_, s, m)| Cluster { point: s / m as f64, size: m }).collect()
}

fn cluster_vandermonde(cl: &[Cluster]) -> LogValue {
    let mut v = LogValue::from_complex(Complex64::from(1.0));
    for l in 0..cl.len() {
        for k in 0..l {
            let d = LogValue::from_complex(cl[l].point - cl[k].point);
            for _ in 0..(cl[l].size * cl[k].size) {
                v = v.mul(&d);
            }
        }
    }
    v
}

/// det[F(r_b, c_c)] / (Δ(r) Δ(c)) with confluent limits.
///
/// `entry(r, i, c, m)` must return the Taylor coefficients of order 0..=m in
/// the column variable around `c` of (1/i!)∂_r^i F(r, ·).
pub fn confluent_ratio<F>(rows: AxisSpec, cols: AxisSpec, entry: F) -> Result<LogValue>
where
    F: Fn(Complex64, usize, Complex64, usize) -> Vec<Complex64>,
{
    if rows.points.len() != cols.points.len() {
        return Err(Error::Dimension("confluent determinant must be square".into()));
    }
    let rc = clusters(rows.points, rows.vandermonde, rows.tol);
    let cc = clusters(cols.points, cols.vandermonde, cols.tol);
    let n = rows.points.len();
    let mut mat = Vec::with_capacity(n);
    let mut log_scale = 0.0;
    for r in &rc {
        for i in 0..r.size {
            let mut row = Vec::with_capacity(n);
            for c in &cc {
                let t = entry(r.point, i, c.point, c.size - 1);
                row.extend_from_slice(&t[..c.size]);
            }
            let m = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if !m.is_finite() {
                return Err(Error::Domain("non-finite determinant entry".into()));
            }
            if m > 0.0 {
                for z in row.iter_mut() {
                    *z /= m;
                }
                log_scale += m.ln();
            }
            mat.push(row);
        }
    }
    let mut v = det_complex_scaled(mat).scale_log(log_scale);
    if rows.vandermonde {
        v = v.div(&cluster_vandermonde(&rc));
    }
    if cols.vandermonde {
        v = v.div(&cluster_vandermonde(&cc));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    // F(s, u) = u^s: det[u_c^{s_b}]/(Δ(s)Δ(u)); at s=(0,1) this is 1 for any u.
    fn power_entry(s: Complex64, i: usize, u: Complex64, m: usize) -> Vec<Complex64> {
        let x = Jet::variable(u, m);
        let l = x.ln();
        let mut j = x.powc(s);
        let mut f = 1.0;
        for k in 1..=i {
            j = &j * &l;
            f *= k as f64;
        }
        j.scale(Complex64::from(1.0 / f)).c
    }

    #[test]
    fn linear_rows_give_one() {
        let s = [Complex64::from(0.0), Complex64::from(1.0)];
        for u in [[2.0, 3.0], [2.0, 2.0], [2.0, 2.0 + 1e-12]] {
            let uc = [Complex64::from(u[0]), Complex64::from(u[1])];
            let v = confluent_ratio(
                AxisSpec::vandermonde(&s, 1e-8),
                AxisSpec::vandermonde(&uc, 1e-8),
                power_entry,
            )
            .unwrap();
            assert!((v.to_complex() - 1.0).norm() < 1e-12, "{u:?}");
        }
    }

    #[test]
    fn confluent_limit_is_continuous() {
        let s = [Complex64::from(0.5), Complex64::from(2.0), Complex64::from(3.5)];
        let eval = |u: [f64; 3]| {
            let uc: Vec<Complex64> = u.iter().map(|&x| Complex64::from(x)).collect();
            confluent_ratio(
                AxisSpec::vandermonde(&s, 1e-8),
                AxisSpec::vandermonde(&uc, 1e-8),
                power_entry,
            )
            .unwrap()
            .to_complex()
        };
        let exact = eval([1.5, 1.5, 1.5]);
        let near = eval([1.5, 1.5 + 1e-4, 1.5 + 2e-4]);
        assert!((exact - near).norm() < 1e-3 * exact.norm());
        let part = eval([1.5, 1.5, 2.5]);
        let part_near = eval([1.5, 1.5 + 1e-5, 2.5]);
        assert!((part - part_near).norm() < 1e-4 * part.norm());
    }
}
