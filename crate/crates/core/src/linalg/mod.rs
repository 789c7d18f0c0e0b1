//! Matrix and spectrum types, Haar sampling, projections and Vandermonde
//! utilities.

mod confluent;
mod det;

pub use confluent::{confluent_ratio, AxisSpec, LogValue};
pub use det::{det_complex_scaled, lu_det_real};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub type Matrix = DMatrix<f64>;

/// Real antisymmetric matrix of even dimension 2n.
#[derive(Debug, Clone, PartialEq)]
pub struct AntisymmetricMatrix {
    m: Matrix,
}

impl AntisymmetricMatrix {
    /// Accepts only exactly antisymmetric input.
    pub fn new(m: Matrix) -> Result<Self> {
        check_even_square(&m)?;
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] + m[(j, i)]).abs());
            }
        }
        if worst > 0.0 {
            return Err(Error::NotAntisymmetric(worst));
        }
        Ok(AntisymmetricMatrix { m })
    }

    /// (m − mᵀ)/2.
    pub fn antisymmetrize(m: &Matrix) -> Result<Self> {
        check_even_square(m)?;
        let d = m.nrows();
        let mut out = Matrix::zeros(d, d);
        for i in 0..d {
            for j in (i + 1)..d {
                let v = 0.5 * (m[(i, j)] - m[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = -v;
            }
        }
        Ok(AntisymmetricMatrix { m: out })
    }

    pub fn zeros(n: usize) -> Self {
        AntisymmetricMatrix { m: Matrix::zeros(2 * n, 2 * n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    /// g·x·gᵀ, antisymmetrized.
    pub fn conjugate(&self, g: &Matrix) -> Result<Self> {
        if g.ncols() != self.dim() || g.nrows() != self.dim() {
            return Err(Error::Dimension(format!(
                "cannot conjugate {}×{} by {}×{}",
                self.dim(),
                self.dim(),
                g.nrows(),
                g.ncols()
            )));
        }
        AntisymmetricMatrix::antisymmetrize(&(g * &self.m * g.transpose()))
    }
}

fn check_even_square(m: &Matrix) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 || m.nrows() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "expected even square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Invertible real 2n×2n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralLinearMatrix {
    m: Matrix,
}

impl GeneralLinearMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        check_even_square(&m)?;
        // relative determinant: |det| / ∏ column norms
        let (sign, logdet) = lu_det_real(&m);
        let lognorms: f64 = m.column_iter().map(|c| c.norm().ln()).sum();
        let rel = if sign == 0.0 { 0.0 } else { (logdet - lognorms).exp() };
        if !(rel > 1e-12) {
            return Err(Error::Singular(rel));
        }
        Ok(GeneralLinearMatrix { m })
    }

    pub fn identity(n: usize) -> Self {
        GeneralLinearMatrix { m: Matrix::identity(2 * n, 2 * n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }
}

/// Real orthogonal m×m matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix {
    m: Matrix,
}

impl OrthogonalMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::Dimension("orthogonal matrix must be square".into()));
        }
        let d = m.nrows();
        let e = (m.transpose() * &m - Matrix::identity(d, d)).amax();
        if e > 1e-12 {
            return Err(Error::Domain(format!("‖kᵀk − 1‖ = {e:e}")));
        }
        Ok(OrthogonalMatrix { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn determinant(&self) -> f64 {
        lu_det_real(&self.m).0
    }
}

/// Ascending nonnegative singular values a_1 ≤ … ≤ a_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for SingularSpectrum {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SingularSpectrum::new(v)
    }
}

impl From<SingularSpectrum> for Vec<f64> {
    fn from(s: SingularSpectrum) -> Vec<f64> {
        s.values
    }
}

impl SingularSpectrum {
    /// Sorts the input; rejects negative or non-finite entries.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Dimension("empty spectrum".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain(format!("spectrum entries must be finite and ≥ 0: {values:?}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(SingularSpectrum { values })
    }

    pub fn ones(n: usize) -> Self {
        SingularSpectrum { values: vec![1.0; n] }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Minimum relative gap between consecutive entries (∞ for n = 1).
    pub fn degeneracy_gap(&self) -> f64 {
        self.values
            .windows(2)
            .map(|w| {
                let s = w[1].abs().max(w[0].abs());
                if s == 0.0 {
                    0.0
                } else {
                    (w[1] - w[0]) / s
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_degenerate(&self) -> bool {
        self.degeneracy_gap() <= DEGENERACY_TOL
    }

    pub fn squares(&self) -> Vec<f64> {
        self.values.iter().map(|a| a * a).collect()
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        SingularSpectrum::new(self.values.iter().map(|a| a * lambda).collect())
    }
}

/// Relative gap below which spectra are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Δ_n(a²) = ∏_{k<l}(a_l² − a_k²) for the given ordering.
pub fn vandermonde_sq(a: &[f64]) -> f64 {
    let mut p = 1.0;
    for l in 0..a.len() {
        for k in 0..l {
            p *= a[l] * a[l] - a[k] * a[k];
        }
    }
    p
}

/// (sign, ln|Δ_n(a²)|).
pub fn log_vandermonde_sq(a: &[f64]) -> (f64, f64) {
    let sq: Vec<f64> = a.iter().map(|x| x * x).collect();
    crate::special::log_vandermonde(&sq)
}

pub fn build_canonical(a: &SingularSpectrum) -> AntisymmetricMatrix {
    let n = a.n();
    let mut m = Matrix::zeros(2 * n, 2 * n);
    for (j, &v) in a.values().iter().enumerate() {
        m[(2 * j, 2 * j + 1)] = v;
        m[(2 * j + 1, 2 * j)] = -v;
    }
    AntisymmetricMatrix { m }
}

pub fn singular_spectrum(x: &AntisymmetricMatrix) -> Result<SingularSpectrum> {
    let xtx = x.matrix().transpose() * x.matrix();
    let mut ev: Vec<f64> = xtx.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let scale = ev.last().copied().unwrap_or(0.0).abs();
    let mut vals = Vec::with_capacity(x.n());
    for p in ev.chunks(2) {
        if scale > 0.0 {
            let mis = (p[1] - p[0]).abs() / scale;
            if mis > 1e-8 {
                return Err(Error::Pairing(mis));
            }
        }
        vals.push((0.5 * (p[0] + p[1])).max(0.0).sqrt());
    }
    SingularSpectrum::new(vals)
}

/// Haar-distributed orthogonal matrix via QR of a Gaussian matrix, with
/// positive R diagonal and one column flipped with probability ½.
pub fn haar_orthogonal(m: usize, rng: &mut RandomStream) -> OrthogonalMatrix {
    let g = Matrix::from_fn(m, m, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if rng.random::<bool>() {
        q.column_mut(0).neg_mut();
    }
    OrthogonalMatrix { m: q }
}

/// Leading (2n−2)×(2n−2) block.
pub fn project_corank2(x: &AntisymmetricMatrix) -> Result<AntisymmetricMatrix> {
    if x.dim() < 4 {
        return Err(Error::Domain("corank-2 projection needs dim ≥ 4".into()));
    }
    let d = x.dim() - 2;
    Ok(AntisymmetricMatrix { m: x.matrix().view((0, 0), (d, d)).into_owned() })
}
