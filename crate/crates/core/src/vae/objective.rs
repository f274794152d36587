use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// A point in the latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode<T>(pub Vec<T>);

impl<T: Real> LatentCode<T> {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    /// `(1 − α)·a + α·b`
    pub fn lerp(a: &Self, b: &Self, alpha: T) -> Self {
        let one = T::one();
        LatentCode(
            a.0.iter()
                .zip(&b.0)
                .map(|(&x, &y)| (one - alpha) * x + alpha * y)
                .collect(),
        )
    }
}

/// Negated ELBO split into its parts, in nats. Reconstruction is summed
/// over the non-padding tokens of a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub reconstruction_nll: f64,
    pub kl: f64,
    pub kl_weight: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(reconstruction_nll: f64, kl: f64, kl_weight: f64) -> Self {
        LossBreakdown {
            reconstruction_nll,
            kl,
            kl_weight,
            total: reconstruction_nll + kl_weight * kl,
        }
    }
}

/// `z = mu + exp(½·logvar) ⊙ eps`
pub fn reparameterize<T: Real>(mu: &[T], logvar: &[T], eps: &[T]) -> Result<LatentCode<T>> {
    if mu.len() != logvar.len() || mu.len() != eps.len() {
        return Err(Error::dim(
            "reparameterize",
            mu.len(),
            format!("logvar={}, eps={}", logvar.len(), eps.len()),
        ));
    }
    let half = T::from_f64(0.5);
    Ok(LatentCode(
        mu.iter()
            .zip(logvar)
            .zip(eps)
            .map(|((&m, &lv), &e)| m + (half * lv).exp() * e)
            .collect(),
    ))
}

/// `KL(N(mu, diag(exp(logvar))) ‖ N(0, I)) = −½ Σ (1 + logvar − mu² − exp(logvar))`
pub fn kl_divergence<T: Real>(mu: &[T], logvar: &[T]) -> Result<f64> {
    if mu.len() != logvar.len() {
        return Err(Error::dim("kl_divergence", mu.len(), logvar.len()));
    }
    Ok(kl_terms(mu, logvar))
}

pub(crate) fn kl_terms<T: Real>(mu: &[T], logvar: &[T]) -> f64 {
    let s: f64 = mu
        .iter()
        .zip(logvar)
        .map(|(&m, &lv)| {
            let (m, lv) = (m.as_f64(), lv.as_f64());
            1.0 + lv - m * m - lv.exp()
        })
        .sum();
    // Each term is ≤ 0 mathematically; rounding can leave a tiny positive sum.
    (-0.5 * s).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.0f64; 3], &[0.0; 3]).unwrap(), 0.0);
        assert!((kl_divergence(&[1.0f64, 0.0], &[0.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(kl_divergence(&[1.0f64], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn reparameterize_examples() {
        let mu = [0.5f64, -1.0];
        assert_eq!(
            reparameterize(&mu, &[0.3, -2.0], &[0.0, 0.0]).unwrap().0,
            mu.to_vec()
        );
        let z = reparameterize(&mu, &[0.0, 0.0], &[1.5, -0.25]).unwrap();
        assert_eq!(z.0, vec![2.0, -1.25]);
    }

    #[test]
    fn breakdown_total() {
        let l = LossBreakdown::new(10.0, 2.0, 0.25);
        assert_eq!(l.total, 10.5);
        assert_eq!(LossBreakdown::new(3.0, 7.0, 0.0).total, 3.0);
    }

    #[test]
    fn lerp_endpoints_are_exact() {
        let a = LatentCode(vec![0.1f32, -3.7, 2.2]);
        let b = LatentCode(vec![9.0f32, 0.3, -1.1]);
        assert_eq!(LatentCode::lerp(&a, &b, 0.0), a);
        assert_eq!(LatentCode::lerp(&a, &b, 1.0), b);
    }

    proptest! {
        #[test]
        fn kl_is_non_negative(v in prop::collection::vec((-5.0f64..5.0, -6.0f64..4.0), 1..16)) {
            let (mu, lv): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assert!(kl_divergence(&mu, &lv).unwrap() >= 0.0);
        }
    }
}
