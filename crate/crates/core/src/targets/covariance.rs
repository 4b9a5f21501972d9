use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Smallest eigenvalue accepted as positive definite.
const PD_TOLERANCE: f64 = 1e-10;

/// Equicorrelation matrix `r·J + (1−r)·I`: unit diagonal, `r` everywhere else.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpec {
    dim: usize,
    correlation: f64,
}

impl CovarianceSpec {
    pub fn new(dim: usize, correlation: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("covariance dimension must be at least 1"));
        }
        let spec = Self { dim, correlation };
        let (lo, hi) = spec.admissible_range();
        if !correlation.is_finite() || spec.min_eigenvalue() <= PD_TOLERANCE {
            return Err(Error::param(format!(
                "correlation {correlation} is outside the positive-definite range ({lo}, {hi}) for dimension {dim}"
            )));
        }
        Ok(spec)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            correlation: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn correlation(&self) -> f64 {
        self.correlation
    }

    /// Open interval of correlations yielding a positive-definite matrix.
    pub fn admissible_range(&self) -> (f64, f64) {
        if self.dim == 1 {
            (f64::NEG_INFINITY, 1.0)
        } else {
            (-1.0 / (self.dim as f64 - 1.0), 1.0)
        }
    }

    /// Eigenvalues are `1−r` (multiplicity k−1) and `1+(k−1)r`.
    pub fn min_eigenvalue(&self) -> f64 {
        let r = self.correlation;
        if self.dim == 1 {
            1.0
        } else {
            (1.0 - r).min(1.0 + (self.dim as f64 - 1.0) * r)
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            if i == j {
                1.0
            } else {
                self.correlation
            }
        })
    }

    pub fn is_identity(&self) -> bool {
        self.correlation == 0.0 || self.dim == 1
    }
}

pub fn build_covariance(dim: usize, correlation: f64) -> Result<DMatrix<f64>> {
    Ok(CovarianceSpec::new(dim, correlation)?.matrix())
}

/// Multivariate normal with a cached lower Cholesky factor.
#[derive(Debug, Clone)]
pub struct Mvn {
    mean: DVector<f64>,
    /// `None` for the identity covariance.
    chol: Option<DMatrix<f64>>,
    log_norm: f64,
}

impl Mvn {
    pub fn new(mean: Vec<f64>, cov: &CovarianceSpec) -> Result<Self> {
        let k = mean.len();
        if k != cov.dim() {
            return Err(Error::param(format!(
                "mean has length {k} but covariance has dimension {}",
                cov.dim()
            )));
        }
        let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let (chol, log_det_half) = if cov.is_identity() {
            (None, 0.0)
        } else {
            let l = cov
                .matrix()
                .cholesky()
                .ok_or_else(|| Error::param("covariance is not positive definite"))?
                .unpack();
            let half = l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
            (Some(l), half)
        };
        Ok(Self {
            mean: DVector::from_vec(mean),
            chol,
            log_norm: -(k as f64) * half_log_2pi - log_det_half,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let mut z = DVector::from_iterator(
            x.len(),
            x.iter().zip(self.mean.iter()).map(|(a, b)| a - b),
        );
        if let Some(l) = &self.chol {
            l.solve_lower_triangular_mut(&mut z);
        }
        self.log_norm - 0.5 * z.norm_squared()
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        match &self.chol {
            None => out.extend(z.iter().zip(self.mean.iter()).map(|(a, b)| a + b)),
            Some(l) => {
                let x = l * z + &self.mean;
                out.extend(x.iter());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_correlation_is_identity() {
        assert_eq!(build_covariance(2, 0.0).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn entrywise_equicorrelation() {
        let m = build_covariance(2, 0.9).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]));
    }

    #[test]
    fn rejects_non_pd_correlation() {
        let err = build_covariance(3, -0.6).unwrap_err().to_string();
        assert!(err.contains("(-0.5, 1)"), "{err}");
        assert!(build_covariance(4, 1.0).is_err());
        assert!(build_covariance(3, -0.499).is_ok());
    }

    #[test]
    fn closed_form_eigenvalues_match_numeric() {
        for &(k, r) in &[(3usize, 0.9), (10, 0.2), (5, -0.2)] {
            let spec = CovarianceSpec::new(k, r).unwrap();
            let eig = spec.matrix().symmetric_eigenvalues();
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!((min - spec.min_eigenvalue()).abs() < 1e-12);
        }
    }

    #[test]
    fn log_pdf_standard_normal_origin() {
        let mvn = Mvn::new(vec![0.0; 3], &CovarianceSpec::identity(3)).unwrap();
        let expect = -1.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((mvn.log_pdf(&[0.0; 3]) - expect).abs() < 1e-14);
    }

    #[test]
    fn log_pdf_correlated_matches_dense_formula() {
        let spec = CovarianceSpec::new(3, 0.9).unwrap();
        let mvn = Mvn::new(vec![1.0, -1.0, 0.5], &spec).unwrap();
        let cov = spec.matrix();
        let inv = cov.clone().try_inverse().unwrap();
        let x = DVector::from_vec(vec![0.3, 0.2, -0.4]);
        let d = &x - DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let quad = (d.transpose() * inv * &d)[0];
        let expect = -1.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * cov.determinant().ln() - 0.5 * quad;
        assert!((mvn.log_pdf(x.as_slice()) - expect).abs() < 1e-12);
    }
}
