use crate::error::{Error, Result};
use crate::real::Real;

/// Numerically stable softmax written into `probs`; returns `log Σ exp`.
pub fn softmax_in_place<T: Real>(values: &mut [T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for p in values.iter_mut() {
        *p = (*p - max).exp();
        sum += *p;
    }
    for p in values.iter_mut() {
        *p /= sum;
    }
    max + sum.ln()
}

/// Returns `(−log softmax(logits)[target], softmax(logits))`.
pub fn softmax_cross_entropy<T: Real>(logits: &[T], target: usize) -> Result<(T, Vec<T>)> {
    if target >= logits.len() {
        return Err(Error::Contract(format!(
            "target {target} out of range for {} classes",
            logits.len()
        )));
    }
    let mut probs = logits.to_vec();
    let lse = softmax_in_place(&mut probs);
    Ok((lse - logits[target], probs))
}

/// Gradient of the cross-entropy w.r.t. the logits: `probs − onehot(target)`.
pub fn softmax_cross_entropy_grad<T: Real>(probs: &[T], target: usize) -> Vec<T> {
    let mut g = probs.to_vec();
    g[target] -= T::one();
    g
}
