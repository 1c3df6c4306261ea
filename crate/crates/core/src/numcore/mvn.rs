//! Multivariate normal sampling and log-density, parameterized either by a
//! Cholesky factor of the covariance or of the precision. The precision form
//! is what curvature-based proposals produce naturally (the factor of −H),
//! so both directions avoid an explicit inverse.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::numcore::linalg::CholeskyFactor;
use crate::numcore::rng::ChainRng;

const LN_2PI: f64 = 1.837_877_066_409_345_6;

fn check_dim(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(CoreError::Dimension { op, expected, got });
    }
    Ok(())
}

/// Draws mean + L z with z i.i.d. standard normal, L the covariance factor.
pub fn mvn_sample(mean: &[f64], chol_cov: &CholeskyFactor, rng: &mut ChainRng) -> Result<Vec<f64>> {
    check_dim("mvn_sample", chol_cov.dim(), mean.len())?;
    let z: Vec<f64> = (0..mean.len())
        .map(|_| StandardNormal.sample(rng))
        .collect();
    let lz = chol_cov.mul_vec(&z);
    Ok(mean.iter().zip(&lz).map(|(m, v)| m + v).collect())
}

/// Gaussian log-density with covariance given through its Cholesky factor.
pub fn mvn_logpdf(x: &[f64], mean: &[f64], chol_cov: &CholeskyFactor) -> Result<f64> {
    check_dim("mvn_logpdf", chol_cov.dim(), mean.len())?;
    check_dim("mvn_logpdf", mean.len(), x.len())?;
    let k = mean.len();
    let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let z = chol_cov.solve_lower(&diff);
    let quad: f64 = z.iter().map(|v| v * v).sum();
    Ok(-0.5 * (k as f64) * LN_2PI - 0.5 * chol_cov.log_det() - 0.5 * quad)
}

/// Draws from N(mean, Λ⁻¹) with Λ = L Lᵀ given through `chol_prec`.
pub fn mvn_sample_prec(
    mean: &[f64],
    chol_prec: &CholeskyFactor,
    rng: &mut ChainRng,
) -> Result<Vec<f64>> {
    check_dim("mvn_sample_prec", chol_prec.dim(), mean.len())?;
    let z: Vec<f64> = (0..mean.len())
        .map(|_| StandardNormal.sample(rng))
        .collect();
    // x = mean + L⁻ᵀ z has covariance (L Lᵀ)⁻¹.
    let v = chol_prec.solve_lower_transpose(&z);
    Ok(mean.iter().zip(&v).map(|(m, t)| m + t).collect())
}

/// Gaussian log-density with precision given through its Cholesky factor.
pub fn mvn_logpdf_prec(x: &[f64], mean: &[f64], chol_prec: &CholeskyFactor) -> Result<f64> {
    check_dim("mvn_logpdf_prec", chol_prec.dim(), mean.len())?;
    check_dim("mvn_logpdf_prec", mean.len(), x.len())?;
    let k = mean.len();
    let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    // quad = ‖Lᵀ d‖², log|Σ| = −log|Λ|.
    let mut quad = 0.0;
    for i in 0..k {
        let mut s = 0.0;
        for (j, d) in diff.iter().enumerate().skip(i) {
            s += chol_prec.get(j, i) * d;
        }
        quad += s * s;
    }
    Ok(-0.5 * (k as f64) * LN_2PI + 0.5 * chol_prec.log_det() - 0.5 * quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::linalg::{cholesky, SymmetricMatrix};
    use crate::numcore::rng::{chain_rng, RngSeed};

    #[test]
    fn scalar_standard_normal_at_zero() {
        let l = cholesky(&SymmetricMatrix::identity(1)).unwrap();
        let v = mvn_logpdf(&[0.0], &[0.0], &l).unwrap();
        assert!((v + 0.5 * LN_2PI).abs() < 1e-15);
    }

    #[test]
    fn at_mean_identity_cov() {
        for k in [1usize, 3, 7] {
            let l = cholesky(&SymmetricMatrix::identity(k)).unwrap();
            let x = vec![0.25; k];
            let v = mvn_logpdf(&x, &x, &l).unwrap();
            assert!((v + 0.5 * k as f64 * LN_2PI).abs() < 1e-13);
        }
    }

    #[test]
    fn covariance_and_precision_forms_agree() {
        let mut cov = SymmetricMatrix::zeros(3);
        cov.set(0, 0, 2.0);
        cov.set(1, 1, 1.5);
        cov.set(2, 2, 1.0);
        cov.set(0, 1, 0.4);
        cov.set(1, 2, -0.3);
        let lc = cholesky(&cov).unwrap();
        // Build the precision by solving for the identity columns.
        let mut prec = SymmetricMatrix::zeros(3);
        for j in 0..3 {
            let mut e = vec![0.0; 3];
            e[j] = 1.0;
            let col = lc.solve(&e);
            for i in 0..3 {
                prec.set(i, j, col[i]);
            }
        }
        let lp = cholesky(&prec).unwrap();
        let x = [0.3, -0.7, 1.1];
        let mean = [0.1, 0.0, -0.2];
        let a = mvn_logpdf(&x, &mean, &lc).unwrap();
        let b = mvn_logpdf_prec(&x, &mean, &lp).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn scalar_density_integrates_to_one() {
        let l = cholesky(&SymmetricMatrix::scaled_identity(1, 1.7)).unwrap();
        let mean = [0.4];
        // Trapezoid over a wide dense grid.
        let (lo, hi, steps) = (-12.0, 12.0, 200_000);
        let h = (hi - lo) / steps as f64;
        let mut total = 0.0;
        for i in 0..=steps {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            total += w * mvn_logpdf(&[x], &mean, &l).unwrap().exp();
        }
        total *= h;
        assert!((total - 1.0).abs() < 1e-6, "integral {total}");
    }

    #[test]
    fn empirical_covariance_matches() {
        let mut cov = SymmetricMatrix::zeros(2);
        cov.set(0, 0, 1.0);
        cov.set(1, 1, 2.0);
        cov.set(0, 1, 0.6);
        let l = cholesky(&cov).unwrap();
        let mut rng = chain_rng(RngSeed(99), 0);
        let n = 100_000;
        let mean = [0.0, 0.0];
        let mut acc = [0.0f64; 3];
        for _ in 0..n {
            let s = mvn_sample(&mean, &l, &mut rng).unwrap();
            acc[0] += s[0] * s[0];
            acc[1] += s[1] * s[1];
            acc[2] += s[0] * s[1];
        }
        let emp = [acc[0] / n as f64, acc[1] / n as f64, acc[2] / n as f64];
        assert!((emp[0] - 1.0).abs() < 5e-2);
        assert!((emp[1] - 2.0).abs() < 5e-2);
        assert!((emp[2] - 0.6).abs() < 5e-2);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let l = cholesky(&SymmetricMatrix::identity(2)).unwrap();
        assert!(mvn_logpdf(&[0.0], &[0.0, 0.0], &l).is_err());
        assert!(mvn_logpdf(&[0.0, 0.0, 0.0], &[0.0, 0.0], &l).is_err());
    }
}
