use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{add_col_sums, add_row_bias, gemm_nn, gemm_nt, gemm_tn, Matrix};
use crate::error::{Error, Result};
use crate::real::Real;

/// Affine layer `y = W x + b` with `W: out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            weight: Matrix::zeros(output, input),
            bias: vec![T::zero(); output],
        }
    }

    /// Weights and bias from U(-k, k).
    pub fn uniform<R: Rng>(input: usize, output: usize, k: f64, rng: &mut R) -> Self {
        let weight = Matrix::uniform(output, input, k, rng);
        let bias = (0..output)
            .map(|_| T::from_f64(rng.gen_range(-k..k)))
            .collect();
        Dense { weight, bias }
    }

    pub fn input_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_size(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        dense_forward(x, &self.weight, &self.bias)
    }

    /// Row-wise forward over a `rows × in` buffer.
    pub fn forward_batch(&self, x: &[T], rows: usize) -> Vec<T> {
        let (out, inp) = self.weight.shape();
        let mut y = vec![T::zero(); rows * out];
        gemm_nt(rows, inp, out, x, self.weight.as_slice(), T::zero(), &mut y);
        add_row_bias(&mut y, &self.bias);
        y
    }

    /// Accumulates parameter gradients into `grad` and, when requested,
    /// writes (overwrites) the input gradient into `dx`.
    pub fn backward_batch(
        &self,
        x: &[T],
        rows: usize,
        dy: &[T],
        grad: &mut Dense<T>,
        dx: Option<&mut [T]>,
    ) {
        let (out, inp) = self.weight.shape();
        gemm_tn(out, rows, inp, dy, x, T::one(), grad.weight.as_mut_slice());
        add_col_sums(&mut grad.bias, &dy[..rows * out]);
        if let Some(dx) = dx {
            gemm_nn(rows, out, inp, dy, self.weight.as_slice(), T::zero(), dx);
        }
    }
}

/// `W x + b` for a single vector.
pub fn dense_forward<T: Real>(x: &[T], weight: &Matrix<T>, bias: &[T]) -> Result<Vec<T>> {
    let (out, inp) = weight.shape();
    if x.len() != inp {
        return Err(Error::dim("dense_forward (input)", inp, x.len()));
    }
    if bias.len() != out {
        return Err(Error::dim("dense_forward (bias)", out, bias.len()));
    }
    Ok((0..out)
        .map(|r| {
            weight
                .row(r)
                .iter()
                .zip(x)
                .fold(bias[r], |acc, (&w, &xi)| acc + w * xi)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weight_passes_input_through() {
        let x = [0.3, -1.2, 4.0];
        let y = dense_forward(&x, &Matrix::<f64>::identity(3), &[0.0; 3]).unwrap();
        assert_eq!(y, x.to_vec());
    }

    #[test]
    fn zero_input_yields_bias() {
        let w = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let y = dense_forward(&[0.0; 3], &w, &[0.5, -0.5]).unwrap();
        assert_eq!(y, vec![0.5, -0.5]);
    }

    #[test]
    fn two_by_two_matches_hand_multiplication() {
        // [[0.2, -0.7], [1.5, 0.1]] · [3, -2] + [0.05, 1] computed by hand:
        // row 0: 0.6 + 1.4 + 0.05 = 2.05; row 1: 4.5 - 0.2 + 1 = 5.3
        let w = Matrix::from_vec(2, 2, vec![0.2, -0.7, 1.5, 0.1]).unwrap();
        let y = dense_forward(&[3.0, -2.0], &w, &[0.05, 1.0]).unwrap();
        assert!((y[0] - 2.05f64).abs() < 1e-12);
        assert!((y[1] - 5.3f64).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_dimension_error() {
        let w = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(
            dense_forward(&[1.0, 2.0], &w, &[0.0; 2]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn sum_loss_weight_gradient_is_input_outer_product() {
        // loss = sum(W x): dW[r][c] = x[c] for every row r.
        let layer = Dense {
            weight: Matrix::from_vec(2, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap(),
            bias: vec![0.0; 2],
        };
        let x = [1.5, -2.0, 0.25];
        let mut grad = Dense::zeros(3, 2);
        layer.backward_batch(&x, 1, &[1.0, 1.0], &mut grad, None);
        for r in 0..2 {
            assert_eq!(grad.weight.row(r), &x);
        }
        assert_eq!(grad.bias, vec![1.0, 1.0]);
    }

    #[test]
    fn batch_forward_agrees_with_vector_forward() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let layer = Dense::<f64>::uniform(4, 3, 0.5, &mut rng);
        let x = Matrix::<f64>::uniform(2, 4, 1.0, &mut rng);
        let y = layer.forward_batch(x.as_slice(), 2);
        for r in 0..2 {
            let single = layer.forward(x.row(r)).unwrap();
            for (a, b) in single.iter().zip(&y[r * 3..r * 3 + 3]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
