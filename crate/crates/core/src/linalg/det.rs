use super::confluent::LogValue;
use super::Matrix;
use num_complex::Complex64;

/// Full-pivot LU determinant of a complex matrix in log form.
pub fn det_complex_scaled(mut a: Vec<Vec<Complex64>>) -> LogValue {
    let n = a.len();
    let mut phase = Complex64::from(1.0);
    let mut log = 0.0;
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                let m = v.norm();
                if m > best {
                    best = m;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best == 0.0 {
            return LogValue::zero();
        }
        if pi != k {
            a.swap(pi, k);
            phase = -phase;
        }
        if pj != k {
            for row in a.iter_mut() {
                row.swap(pj, k);
            }
            phase = -phase;
        }
        let unit = a[k][k] / best;
        phase *= unit;
        log += best.ln();
        for i in (k + 1)..n {
            // a/piv = (a/|piv|)·conj(unit), safe for subnormal pivots
            let f = (a[i][k] / best) * unit.conj();
            if f == Complex64::from(0.0) {
                continue;
            }
            for j in (k + 1)..n {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }
    LogValue::new(phase, log)
}

/// (sign, ln|det|) of a real matrix; sign 0 for singular input.
pub fn lu_det_real(m: &Matrix) -> (f64, f64) {
    let rows: Vec<Vec<Complex64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Complex64::from(m[(i, j)])).collect())
        .collect();
    let v = det_complex_scaled(rows);
    if v.is_zero() {
        (0.0, f64::NEG_INFINITY)
    } else {
        (v.mantissa.re.signum(), v.log)
    }
}
