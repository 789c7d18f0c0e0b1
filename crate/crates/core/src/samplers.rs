//! Random matrix generators for the induced Ginibre and Jacobi ensembles and
//! the sandwich product X_M⋯X_1 A X_1ᵀ⋯X_Mᵀ.

use crate::error::{Error, Result};
use crate::linalg::{
    build_canonical, haar_orthogonal, singular_spectrum, AntisymmetricMatrix, GeneralLinearMatrix, Matrix,
    SingularSpectrum,
};
use crate::rng::{substream, RandomStream};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Induced real Ginibre factor: g = R(MᵀM)^{1/2}, M of size 2(n+ν)×2n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GinibreSpec {
    pub n: usize,
    pub nu: f64,
}

/// Induced real Jacobi factor from a truncated Haar O(K1) matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobiSpec {
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    #[serde(rename = "K1")]
    pub k1: usize,
}

impl JacobiSpec {
    pub fn new(n: usize, big_n: usize, k1: usize) -> Result<Self> {
        let s = JacobiSpec { n, big_n, k1 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.big_n < self.n {
            return Err(Error::Domain(format!("Jacobi needs N ≥ n (N={}, n={})", self.big_n, self.n)));
        }
        if self.k1 < 2 * (self.n + self.big_n) {
            return Err(Error::Domain(format!(
                "Jacobi needs K1 ≥ 2(n+N) = {}, got {}",
                2 * (self.n + self.big_n),
                self.k1
            )));
        }
        Ok(())
    }

    pub fn nu(&self) -> f64 {
        self.big_n as f64 - self.n as f64
    }

    pub fn mu(&self) -> f64 {
        (self.k1 as f64 - 2.0 * self.n as f64 - 2.0 * self.big_n as f64 - 1.0) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FactorSpec {
    Ginibre(GinibreSpec),
    Jacobi(JacobiSpec),
}

impl FactorSpec {
    pub fn n(&self) -> usize {
        match self {
            FactorSpec::Ginibre(g) => g.n,
            FactorSpec::Jacobi(j) => j.n,
        }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<GeneralLinearMatrix> {
        match self {
            FactorSpec::Ginibre(g) => sample_induced_ginibre(g, rng),
            FactorSpec::Jacobi(j) => sample_induced_jacobi(j, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSpec {
    FixedMatrix { a: SingularSpectrum },
    CanonicalIdentity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub n: usize,
    pub factors: Vec<FactorSpec>,
    pub base: BaseSpec,
}

impl ProductSpec {
    pub fn validate(&self) -> Result<()> {
        for f in &self.factors {
            if f.n() != self.n {
                return Err(Error::Dimension(format!("factor has n = {}, product has n = {}", f.n(), self.n)));
            }
            if let FactorSpec::Jacobi(j) = f {
                j.validate()?;
            }
        }
        if let BaseSpec::FixedMatrix { a } = &self.base {
            if a.n() != self.n {
                return Err(Error::Dimension(format!("base has n = {}, product has n = {}", a.n(), self.n)));
            }
        }
        Ok(())
    }

    pub fn base_spectrum(&self) -> SingularSpectrum {
        match &self.base {
            BaseSpec::FixedMatrix { a } => a.clone(),
            BaseSpec::CanonicalIdentity => SingularSpectrum::ones(self.n),
        }
    }
}

pub fn sample_ginibre_rect(rows: usize, cols: usize, rng: &mut RandomStream) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Symmetric PSD square root; eigenvalues above −1e−14·λ_max are clamped to 0.
pub fn sqrt_psd(m: &Matrix) -> Result<Matrix> {
    let eig = m.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let mut d = eig.eigenvalues.clone();
    for v in d.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-14 * top.max(f64::MIN_POSITIVE) {
                return Err(Error::Domain(format!("matrix is not positive semidefinite (eigenvalue {v:e})")));
            }
            *v = 0.0;
        }
        *v = v.sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * Matrix::from_diagonal(&d) * q.transpose())
}

pub fn sample_induced_ginibre(spec: &GinibreSpec, rng: &mut RandomStream) -> Result<GeneralLinearMatrix> {
    if spec.nu < 0.0 || spec.nu.fract() != 0.0 {
        return Err(Error::AnalyticOnly(format!("ν = {} has no direct sampler", spec.nu)));
    }
    let n2 = 2 * spec.n;
    let m = sample_ginibre_rect(n2 + 2 * spec.nu as usize, n2, rng);
    let root = sqrt_psd(&(m.transpose() * &m))?;
    let r = haar_orthogonal(n2, rng);
    GeneralLinearMatrix::new(r.matrix() * root)
}

pub fn sample_induced_jacobi(spec: &JacobiSpec, rng: &mut RandomStream) -> Result<GeneralLinearMatrix> {
    spec.validate()?;
    let k = haar_orthogonal(spec.k1, rng);
    let m = k.matrix().view((0, 0), (2 * spec.big_n, 2 * spec.n)).into_owned();
    let root = sqrt_psd(&(m.transpose() * &m))?;
    let r = haar_orthogonal(2 * spec.n, rng);
    GeneralLinearMatrix::new(r.matrix() * root)
}

/// Antisymmetric matrix with independent standard normal upper entries.
pub fn sample_gaussian_antisymmetric(n: usize, rng: &mut RandomStream) -> AntisymmetricMatrix {
    let d = 2 * n;
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            let v: f64 = StandardNormal.sample(rng);
            m[(i, j)] = v;
            m[(j, i)] = -v;
        }
    }
    AntisymmetricMatrix::new(m).expect("constructed antisymmetric")
}

pub fn build_product(spec: &ProductSpec, rng: &mut RandomStream) -> Result<AntisymmetricMatrix> {
    spec.validate()?;
    let mut y = build_canonical(&spec.base_spectrum());
    for f in &spec.factors {
        let g = f.sample(rng)?;
        y = y.conjugate(g.matrix())?;
    }
    Ok(y)
}

/// Spectra of `count` independent products; sample i uses stream (seed, i).
pub fn sample_spectra(spec: &ProductSpec, count: usize, seed: u64) -> Result<Vec<SingularSpectrum>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            singular_spectrum(&build_product(spec, &mut rng)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_parameters() {
        let j = JacobiSpec::new(1, 1, 5).unwrap();
        assert_eq!(j.nu(), 0.0);
        assert_eq!(j.mu(), 0.0);
        assert!(JacobiSpec::new(1, 1, 3).is_err());
        assert_eq!(JacobiSpec::new(1, 1, 4).unwrap().mu(), -0.5);
    }

    #[test]
    fn jacobi_values_bounded() {
        let spec = JacobiSpec::new(2, 3, 11).unwrap();
        for i in 0..200 {
            let g = sample_induced_jacobi(&spec, &mut substream(5, i)).unwrap();
            let sv = g.matrix().clone().singular_values();
            assert!(sv.iter().all(|&s| s <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn non_integer_nu_is_analytic_only() {
        let e = sample_induced_ginibre(&GinibreSpec { n: 1, nu: 0.5 }, &mut substream(1, 0));
        assert!(matches!(e, Err(Error::AnalyticOnly(_))));
    }

    #[test]
    fn empty_product_is_base() {
        let a = SingularSpectrum::new(vec![1.0, 2.0]).unwrap();
        let spec = ProductSpec { n: 2, factors: vec![], base: BaseSpec::FixedMatrix { a: a.clone() } };
        let y = build_product(&spec, &mut substream(0, 0)).unwrap();
        assert_eq!(y, build_canonical(&a));
    }

    #[test]
    fn mismatched_factor_rejected() {
        let spec = ProductSpec {
            n: 2,
            factors: vec![FactorSpec::Ginibre(GinibreSpec { n: 1, nu: 0.0 })],
            base: BaseSpec::CanonicalIdentity,
        };
        assert!(matches!(build_product(&spec, &mut substream(0, 0)), Err(Error::Dimension(_))));
    }
}
