//! LSTM layer with hand-derived backward pass.
//!
//! Gate order in every weight matrix, bias and gate buffer is `[i, f, g, o]`
//! (input, forget, cell candidate, output), each block `hidden` wide:
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)      c' = f ⊙ c + i ⊙ g
//! f = σ(W_f x + U_f h + b_f)      h' = o ⊙ tanh(c')
//! g = tanh(W_g x + U_g h + b_g)
//! o = σ(W_o x + U_o h + b_o)
//! ```
//!
//! Batched runs are time-major and carry a per-position mask. A masked
//! position copies the previous state unchanged, so padded tails leave the
//! final state of shorter sequences untouched in both directions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{add_col_sums, add_row_bias, gemm_nn, gemm_nt, gemm_tn, Matrix};
use crate::error::{Error, Result};
use crate::real::{sigmoid, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams<T> {
    /// Input-to-hidden weights, `4h × d`.
    pub w: Matrix<T>,
    /// Hidden-to-hidden weights, `4h × h`.
    pub u: Matrix<T>,
    /// Bias, `4h`.
    pub b: Vec<T>,
}

impl<T: Real> LstmParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w: Matrix::zeros(4 * hidden, input),
            u: Matrix::zeros(4 * hidden, hidden),
            b: vec![T::zero(); 4 * hidden],
        }
    }

    /// All entries from U(-1/√h, 1/√h).
    pub fn uniform<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let k = 1.0 / (hidden as f64).sqrt();
        LstmParams {
            w: Matrix::uniform(4 * hidden, input, k, rng),
            u: Matrix::uniform(4 * hidden, hidden, k, rng),
            b: (0..4 * hidden)
                .map(|_| T::from_f64(rng.gen_range(-k..k)))
                .collect(),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.u.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_size();
        if self.u.rows() != 4 * h {
            return Err(Error::dim("LstmParams (U rows)", 4 * h, self.u.rows()));
        }
        if self.w.rows() != 4 * h {
            return Err(Error::dim("LstmParams (W rows)", 4 * h, self.w.rows()));
        }
        if self.b.len() != 4 * h {
            return Err(Error::dim("LstmParams (bias)", 4 * h, self.b.len()));
        }
        Ok(())
    }

    /// Runs `steps` positions of `batch` sequences. `xs` is time-major
    /// (`steps × batch × d`), `mask[t * batch + b]` marks live positions.
    /// `init` supplies `(h₀, c₀)` (`batch × h` each); zeros otherwise.
    pub fn forward_batch(
        &self,
        xs: &[T],
        steps: usize,
        batch: usize,
        mask: &[bool],
        reverse: bool,
        init: Option<(&[T], &[T])>,
    ) -> LstmTrace<T> {
        let d = self.input_size();
        let h = self.hidden_size();
        let g4 = 4 * h;
        let bh = batch * h;
        assert_eq!(xs.len(), steps * batch * d);
        assert_eq!(mask.len(), steps * batch);

        let (h0, c0) = match init {
            Some((h0, c0)) => {
                assert_eq!(h0.len(), bh);
                assert_eq!(c0.len(), bh);
                (h0.to_vec(), c0.to_vec())
            }
            None => (vec![T::zero(); bh], vec![T::zero(); bh]),
        };

        // Input projections for every position at once, bias folded in.
        let mut gates = vec![T::zero(); steps * batch * g4];
        gemm_nt(
            steps * batch,
            d,
            g4,
            xs,
            self.w.as_slice(),
            T::zero(),
            &mut gates,
        );
        add_row_bias(&mut gates, &self.b);

        let mut hs = vec![T::zero(); steps * bh];
        let mut cs = vec![T::zero(); steps * bh];
        let mut h_prev_all = vec![T::zero(); steps * bh];
        let mut tanh_c = vec![T::zero(); steps * bh];

        let mut h_cur = h0.clone();
        let mut c_cur = c0.clone();
        for t in order(steps, reverse) {
            h_prev_all[t * bh..(t + 1) * bh].copy_from_slice(&h_cur);
            let gt = &mut gates[t * batch * g4..(t + 1) * batch * g4];
            gemm_nt(batch, h, g4, &h_cur, self.u.as_slice(), T::one(), gt);
            for b in 0..batch {
                let live = mask[t * batch + b];
                let row = &mut gt[b * g4..(b + 1) * g4];
                let (gi, rest) = row.split_at_mut(h);
                let (gf, rest) = rest.split_at_mut(h);
                let (gg, go) = rest.split_at_mut(h);
                let hc = &mut h_cur[b * h..(b + 1) * h];
                let cc = &mut c_cur[b * h..(b + 1) * h];
                let tc = &mut tanh_c[t * bh + b * h..t * bh + (b + 1) * h];
                for j in 0..h {
                    let i = sigmoid(gi[j]);
                    let f = sigmoid(gf[j]);
                    let g = gg[j].tanh();
                    let o = sigmoid(go[j]);
                    gi[j] = i;
                    gf[j] = f;
                    gg[j] = g;
                    go[j] = o;
                    let c_new = f * cc[j] + i * g;
                    let th = c_new.tanh();
                    tc[j] = th;
                    if live {
                        cc[j] = c_new;
                        hc[j] = o * th;
                    }
                }
            }
            hs[t * bh..(t + 1) * bh].copy_from_slice(&h_cur);
            cs[t * bh..(t + 1) * bh].copy_from_slice(&c_cur);
        }

        LstmTrace {
            steps,
            batch,
            hidden: h,
            input: d,
            reverse,
            xs: xs.to_vec(),
            mask: mask.to_vec(),
            gates,
            tanh_c,
            h_prev: h_prev_all,
            hs,
            cs,
            h0,
            c0,
            h_last: h_cur,
            c_last: c_cur,
        }
    }

    /// Backpropagates through a trace produced by `forward_batch` on these
    /// parameters. `dh_seq` is the loss gradient w.r.t. the hidden output at
    /// every position, `dh_last`/`dc_last` w.r.t. the final state. Parameter
    /// gradients are accumulated into `grad`.
    pub fn backward_batch(
        &self,
        trace: &LstmTrace<T>,
        dh_seq: Option<&[T]>,
        dh_last: Option<&[T]>,
        dc_last: Option<&[T]>,
        grad: &mut LstmParams<T>,
    ) -> LstmInputGrads<T> {
        let (steps, batch, h, d) = (trace.steps, trace.batch, trace.hidden, trace.input);
        let g4 = 4 * h;
        let bh = batch * h;

        let mut dh = dh_last.map_or_else(|| vec![T::zero(); bh], <[T]>::to_vec);
        let mut dc = dc_last.map_or_else(|| vec![T::zero(); bh], <[T]>::to_vec);
        let mut da = vec![T::zero(); steps * batch * g4];
        let mut dh_next = vec![T::zero(); bh];

        let one = T::one();
        for t in order(steps, !trace.reverse) {
            if let Some(seq) = dh_seq {
                for (x, &s) in dh.iter_mut().zip(&seq[t * bh..(t + 1) * bh]) {
                    *x += s;
                }
            }
            let c_prev = trace.c_prev(t);
            let da_t = &mut da[t * batch * g4..(t + 1) * batch * g4];
            for b in 0..batch {
                let r = b * h..(b + 1) * h;
                if !trace.mask[t * batch + b] {
                    dh_next[r].copy_from_slice(&dh[b * h..(b + 1) * h]);
                    continue;
                }
                let gates = &trace.gates[(t * batch + b) * g4..(t * batch + b + 1) * g4];
                let tc = &trace.tanh_c[t * bh + b * h..t * bh + (b + 1) * h];
                let row = &mut da_t[b * g4..(b + 1) * g4];
                for j in 0..h {
                    let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                    let dht = dh[b * h + j];
                    let th = tc[j];
                    let dct = dc[b * h + j] + dht * o * (one - th * th);
                    row[j] = dct * g * i * (one - i);
                    row[h + j] = dct * c_prev[b * h + j] * f * (one - f);
                    row[2 * h + j] = dct * i * (one - g * g);
                    row[3 * h + j] = dht * th * o * (one - o);
                    dc[b * h + j] = dct * f;
                    dh_next[b * h + j] = T::zero();
                }
            }
            gemm_nn(batch, g4, h, da_t, self.u.as_slice(), one, &mut dh_next);
            std::mem::swap(&mut dh, &mut dh_next);
        }

        let n = steps * batch;
        gemm_tn(g4, n, d, &da, &trace.xs, one, grad.w.as_mut_slice());
        gemm_tn(g4, n, h, &da, &trace.h_prev, one, grad.u.as_mut_slice());
        add_col_sums(&mut grad.b, &da);
        let mut dx = vec![T::zero(); n * d];
        gemm_nn(n, g4, d, &da, self.w.as_slice(), T::zero(), &mut dx);

        LstmInputGrads {
            dx,
            dh0: dh,
            dc0: dc,
        }
    }
}

fn order(steps: usize, reverse: bool) -> Box<dyn Iterator<Item = usize>> {
    if reverse {
        Box::new((0..steps).rev())
    } else {
        Box::new(0..steps)
    }
}

/// Activations cached by a batched forward run.
#[derive(Debug, Clone)]
pub struct LstmTrace<T> {
    steps: usize,
    batch: usize,
    hidden: usize,
    input: usize,
    reverse: bool,
    xs: Vec<T>,
    mask: Vec<bool>,
    gates: Vec<T>,
    tanh_c: Vec<T>,
    h_prev: Vec<T>,
    hs: Vec<T>,
    cs: Vec<T>,
    h0: Vec<T>,
    c0: Vec<T>,
    h_last: Vec<T>,
    c_last: Vec<T>,
}

impl<T: Real> LstmTrace<T> {
    /// Hidden states aligned to input positions, `steps × batch × h`.
    pub fn hidden_states(&self) -> &[T] {
        &self.hs
    }

    pub fn cell_states(&self) -> &[T] {
        &self.cs
    }

    /// Hidden state after the last processed position (position 0 when
    /// running in reverse).
    pub fn final_hidden(&self) -> &[T] {
        &self.h_last
    }

    pub fn final_cell(&self) -> &[T] {
        &self.c_last
    }

    /// Activated gates `[i, f, g, o]` at position `t`, `batch × 4h`.
    pub fn gates_at(&self, t: usize) -> &[T] {
        let w = self.batch * 4 * self.hidden;
        &self.gates[t * w..(t + 1) * w]
    }

    fn c_prev(&self, t: usize) -> &[T] {
        let bh = self.batch * self.hidden;
        let prev = if self.reverse {
            (t + 1 < self.steps).then_some(t + 1)
        } else {
            t.checked_sub(1)
        };
        match prev {
            Some(p) => &self.cs[p * bh..(p + 1) * bh],
            None => &self.c0,
        }
    }

    #[allow(dead_code)]
    pub(crate) fn initial_hidden(&self) -> &[T] {
        &self.h0
    }
}

#[derive(Debug, Clone)]
pub struct LstmInputGrads<T> {
    /// Gradient w.r.t. the inputs, `steps × batch × d`.
    pub dx: Vec<T>,
    pub dh0: Vec<T>,
    pub dc0: Vec<T>,
}

/// One cell step on a single vector.
pub fn lstm_cell_forward<T: Real>(
    x: &[T],
    h_prev: &[T],
    c_prev: &[T],
    p: &LstmParams<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    p.validate()?;
    if x.len() != p.input_size() {
        return Err(Error::dim("lstm_cell_forward (x)", p.input_size(), x.len()));
    }
    let h = p.hidden_size();
    if h_prev.len() != h || c_prev.len() != h {
        return Err(Error::dim(
            "lstm_cell_forward (state)",
            h,
            format!("h={}, c={}", h_prev.len(), c_prev.len()),
        ));
    }
    let trace = p.forward_batch(x, 1, 1, &[true], false, Some((h_prev, c_prev)));
    let (h_out, c_out) = (trace.h_last, trace.c_last);
    if h_out.iter().chain(&c_out).any(|v| !v.is_finite()) {
        return Err(Error::NumericOverflow("lstm_cell_forward"));
    }
    Ok((h_out, c_out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmSequenceOutput<T> {
    /// One hidden state per input position, in original order.
    pub hidden: Vec<Vec<T>>,
    pub final_hidden: Vec<T>,
    pub final_cell: Vec<T>,
}

/// Runs a single sequence from zero state; `reverse` processes it
/// back-to-front while reporting states at their original positions.
pub fn lstm_sequence_forward<T: Real>(
    xs: &[Vec<T>],
    p: &LstmParams<T>,
    reverse: bool,
) -> Result<LstmSequenceOutput<T>> {
    p.validate()?;
    if xs.is_empty() {
        return Err(Error::Contract(
            "lstm_sequence_forward on an empty sequence".into(),
        ));
    }
    let d = p.input_size();
    if let Some(bad) = xs.iter().find(|x| x.len() != d) {
        return Err(Error::dim("lstm_sequence_forward (x)", d, bad.len()));
    }
    let flat: Vec<T> = xs.iter().flatten().copied().collect();
    let trace = p.forward_batch(&flat, xs.len(), 1, &vec![true; xs.len()], reverse, None);
    let h = p.hidden_size();
    Ok(LstmSequenceOutput {
        hidden: trace.hs.chunks_exact(h).map(<[T]>::to_vec).collect(),
        final_hidden: trace.h_last,
        final_cell: trace.c_last,
    })
}
