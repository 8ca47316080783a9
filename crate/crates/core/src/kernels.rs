//! Stationary kernels on objective space and their derivatives.
//!
//! With `d = yi - yl`:
//!
//! | family   | `k`               | `dk/dyl`            | `d2k/dyl dyl`                              |
//! |----------|-------------------|---------------------|--------------------------------------------|
//! | Gaussian | `exp(-θ‖d‖²)`     | `2θ k d`            | `2θ k (2θ d dᵀ − I)`                       |
//! | Laplace  | `exp(-θ‖d‖)`      | `θ k d / ‖d‖`       | `θ k ((θ/‖d‖² + 1/‖d‖³) d dᵀ − I/‖d‖)`      |
//!
//! The mixed block `d2k/dyi dyl` is the negation of `d2k/dyl dyl`. The
//! Laplace derivatives are set to zero when `‖d‖ < LAPLACE_COINCIDENCE`.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::linalg::Matrix;
use crate::points::squared_distance;
use crate::Scalar;

/// Distance below which the Laplace kernel is treated as non-differentiable.
pub const LAPLACE_COINCIDENCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Laplace,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "rbf" => Ok(KernelFamily::Gaussian),
            "laplace" | "laplacian" => Ok(KernelFamily::Laplace),
            other => Err(Error::Config(format!("unknown kernel family `{other}` (expected gaussian or laplace)"))),
        }
    }
}

/// Kernel family plus length-scale `theta > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernelSpec")]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub theta: f64,
}

#[derive(Deserialize)]
struct RawKernelSpec {
    family: KernelFamily,
    theta: f64,
}

impl TryFrom<RawKernelSpec> for KernelSpec {
    type Error = Error;
    fn try_from(raw: RawKernelSpec) -> Result<Self> {
        KernelSpec::new(raw.family, raw.theta)
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return contract(format!("kernel length-scale must be positive and finite, got {theta}"));
        }
        Ok(Self { family, theta })
    }

    pub fn gaussian(theta: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, theta)
    }

    pub fn laplace(theta: f64) -> Result<Self> {
        Self::new(KernelFamily::Laplace, theta)
    }

    /// `k(y, y2)`.
    pub fn value<T: Scalar>(&self, y: &[T], y2: &[T]) -> T {
        let theta = T::c(self.theta);
        let r2 = squared_distance(y, y2);
        match self.family {
            KernelFamily::Gaussian => (-theta * r2).exp(),
            KernelFamily::Laplace => (-theta * r2.sqrt()).exp(),
        }
    }

    /// `dk(yi, yl)/dyl`, written into `out`.
    pub fn grad_into<T: Scalar>(&self, yi: &[T], yl: &[T], out: &mut [T]) {
        let theta = T::c(self.theta);
        let r2 = squared_distance(yi, yl);
        let factor = match self.family {
            KernelFamily::Gaussian => T::c(2.0) * theta * (-theta * r2).exp(),
            KernelFamily::Laplace => {
                let r = r2.sqrt();
                if r < T::c(LAPLACE_COINCIDENCE) {
                    T::zero()
                } else {
                    theta * (-theta * r).exp() / r
                }
            }
        };
        for ((o, &a), &b) in out.iter_mut().zip(yi).zip(yl) {
            *o = factor * (a - b);
        }
    }

    pub fn grad<T: Scalar>(&self, yi: &[T], yl: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); yi.len()];
        self.grad_into(yi, yl, &mut out);
        out
    }

    /// Adds `scale * d2k(yi, yl)/dyl dyl` into the `k x k` block of `out`
    /// starting at `(r0, c0)`.
    pub fn add_hess_to<T: Scalar>(&self, yi: &[T], yl: &[T], scale: T, out: &mut Matrix<T>, r0: usize, c0: usize) {
        let k = yi.len();
        let theta = T::c(self.theta);
        let r2 = squared_distance(yi, yl);
        // hess = a d dᵀ − b I
        let (a, b) = match self.family {
            KernelFamily::Gaussian => {
                let kv = (-theta * r2).exp();
                let two_theta = T::c(2.0) * theta;
                (two_theta * kv * two_theta, two_theta * kv)
            }
            KernelFamily::Laplace => {
                let r = r2.sqrt();
                if r < T::c(LAPLACE_COINCIDENCE) {
                    return;
                }
                let kv = (-theta * r).exp();
                (theta * kv * (theta / r2 + T::one() / (r2 * r)), theta * kv / r)
            }
        };
        let (a, b) = (a * scale, b * scale);
        for p in 0..k {
            let dp = yi[p] - yl[p];
            for q in 0..k {
                let dq = yi[q] - yl[q];
                out[(r0 + p, c0 + q)] += a * dp * dq;
            }
            out[(r0 + p, c0 + p)] -= b;
        }
    }

    /// `d2k(yi, yl)/dyl dyl`.
    pub fn hess<T: Scalar>(&self, yi: &[T], yl: &[T]) -> Matrix<T> {
        let mut m = Matrix::zeros(yi.len(), yi.len());
        self.add_hess_to(yi, yl, T::one(), &mut m, 0, 0);
        m
    }

    /// `d2k(yi, yl)/dyi dyl`, the negation of [`KernelSpec::hess`].
    pub fn mixed_hess<T: Scalar>(&self, yi: &[T], yl: &[T]) -> Matrix<T> {
        let mut m = Matrix::zeros(yi.len(), yi.len());
        self.add_hess_to(yi, yl, -T::one(), &mut m, 0, 0);
        m
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}(theta={})", self.family.name(), self.theta)
    }
}

fn check_dims<T>(a: &[T], b: &[T]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return contract(format!("kernel arguments have dimensions {} and {}", a.len(), b.len()));
    }
    Ok(())
}

pub fn kernel_value<T: Scalar>(spec: &KernelSpec, y: &[T], y2: &[T]) -> Result<T> {
    check_dims(y, y2)?;
    Ok(spec.value(y, y2))
}

/// `dk(yi, yl)/dyl`.
pub fn kernel_grad<T: Scalar>(spec: &KernelSpec, yi: &[T], yl: &[T]) -> Result<Vec<T>> {
    check_dims(yi, yl)?;
    Ok(spec.grad(yi, yl))
}

/// `d2k(yi, yl)/dyl dyl`; pass `mixed = true` for `d2k/dyi dyl`.
pub fn kernel_hess<T: Scalar>(spec: &KernelSpec, yi: &[T], yl: &[T], mixed: bool) -> Result<Matrix<T>> {
    check_dims(yi, yl)?;
    Ok(if mixed { spec.mixed_hess(yi, yl) } else { spec.hess(yi, yl) })
}

/// Second and fourth moments of the kernel's spectral measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMoments<T> {
    /// `E[ω ωᵀ]`.
    pub c: Matrix<T>,
    /// `E‖ω‖²`.
    pub m2: T,
    /// `E‖ω‖⁴`.
    pub m4: T,
    pub sigma_min_c: T,
}

/// Moments of the spectral measure in dimension `k`.
///
/// The Gaussian kernel's spectral measure is `N(0, 2θ I)`. The Laplace
/// kernel's is a multivariate Cauchy-type law without finite second moment.
pub fn spectral_moments<T: Scalar>(spec: &KernelSpec, k: usize) -> Result<SpectralMoments<T>> {
    match spec.family {
        KernelFamily::Laplace => Err(Error::UnsupportedKernel {
            family: "laplace",
            what: "spectral moments: the second moment m2 = E|w|^2 of its spectral measure diverges".into(),
        }),
        KernelFamily::Gaussian => {
            if k == 0 {
                return contract("objective dimension must be positive");
            }
            let s = T::c(2.0 * spec.theta);
            let kk = T::from_count(k);
            Ok(SpectralMoments {
                c: Matrix::from_diag(&vec![s; k]),
                m2: s * kk,
                m4: s * s * kk * (kk + T::c(2.0)),
                sigma_min_c: s,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(g.value(&[0.3, 0.4], &[0.3, 0.4]), 1.0);
        assert!((g.value(&[0.0, 0.0], &[1.0, 0.0]) - (-1.0f64).exp()).abs() < 1e-16);
        let l = KernelSpec::laplace(2.0).unwrap();
        assert!((l.value(&[0.0, 0.0], &[3.0, 4.0]) - (-10.0f64).exp()).abs() < 1e-18);
    }

    #[test]
    fn theta_is_validated() {
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::laplace(-1.0).is_err());
        assert!(KernelSpec::gaussian(f64::NAN).is_err());
        assert!(serde_json::from_str::<KernelSpec>(r#"{"family":"gaussian","theta":-2}"#).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        assert!(kernel_value(&g, &[0.0], &[0.0, 1.0]).is_err());
        assert!(kernel_grad(&g, &[0.0], &[0.0, 1.0]).is_err());
        assert!(kernel_hess(&g, &[0.0], &[0.0, 1.0], false).is_err());
    }

    #[test]
    fn gaussian_hessian_at_coincidence() {
        let g = KernelSpec::gaussian(1.0).unwrap();
        let h = g.hess(&[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(h, Matrix::from_diag(&[-2.0, -2.0]));
        assert_eq!(g.grad(&[0.5, 0.5], &[0.5, 0.5]), vec![0.0, 0.0]);
    }

    #[test]
    fn laplace_coincident_derivatives_vanish() {
        let l = KernelSpec::laplace(1.0).unwrap();
        assert_eq!(l.hess(&[0.0, 0.0], &[0.0, 0.0]), Matrix::zeros(2, 2));
        assert_eq!(l.grad(&[1.0, 2.0], &[1.0, 2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn moments() {
        let m = spectral_moments::<f64>(&KernelSpec::gaussian(1.0).unwrap(), 2).unwrap();
        assert_eq!(m.m2, 4.0);
        assert_eq!(m.m4, 32.0);
        assert_eq!(m.m2, m.c.trace());
        let m = spectral_moments::<f64>(&KernelSpec::gaussian(0.5).unwrap(), 3).unwrap();
        assert_eq!(m.c, Matrix::identity(3));
        assert_eq!(m.sigma_min_c, 1.0);
        let err = spectral_moments::<f64>(&KernelSpec::laplace(1.0).unwrap(), 2).unwrap_err();
        assert!(err.to_string().contains("m2"));
    }
}
