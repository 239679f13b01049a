//! LSTM cell and stack forward steps, dropout masks, and backpropagation
//! through time over the tokens that were actually read.
//!
//! Skipped tokens never enter the forward pass, so the read subsequence forms
//! one contiguous recurrence; the hidden state carried over a jump is an
//! ordinary differentiable link in that chain.

use super::{LstmLayerParams, LstmState, ModelParams};
use crate::error::{Error, Result};
use crate::numeric::{Rng, Scalar};

/// Post-activation gate values cached by the forward pass.
#[derive(Debug, Clone)]
pub struct CellActivations<S> {
    /// `4h`, gate order `[i, f, g, o]`, already through sigmoid/tanh.
    pub gates: Vec<S>,
    /// `tanh(c')` for the new cell state.
    pub tanh_c: Vec<S>,
}

/// Everything the backward pass needs for one layer of one step.
#[derive(Debug, Clone)]
pub struct LayerStepTape<S> {
    /// Layer input after dropout.
    pub x: Vec<S>,
    pub h_prev: Vec<S>,
    pub c_prev: Vec<S>,
    pub act: CellActivations<S>,
    /// Mask that produced `x` (embedding mask for layer 0, inter-layer above).
    pub mask: Option<Vec<S>>,
}

/// One read token: its id plus per-layer caches.
#[derive(Debug, Clone)]
pub struct StepTape<S> {
    pub token: u32,
    pub layers: Vec<LayerStepTape<S>>,
}

/// Forward caches for every token read in one episode, in read order.
#[derive(Debug, Clone, Default)]
pub struct Tape<S> {
    pub steps: Vec<StepTape<S>>,
}

impl<S> Tape<S> {
    pub fn new() -> Self {
        Tape { steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Inverted-dropout masks for a single step: entries are `0` or `1/keep`, so
/// evaluation needs no rescaling and an all-ones mask is exactly a no-op.
#[derive(Debug, Clone)]
pub struct StepMasks<S> {
    /// Applied to the embedding before layer 0.
    pub embed: Option<Vec<S>>,
    /// `inter[l-1]` is applied to layer `l`'s input (the layer below's output).
    pub inter: Vec<Option<Vec<S>>>,
}

fn sample_mask<S: Scalar>(len: usize, rate: f64, rng: &mut Rng) -> Vec<S> {
    let keep = 1.0 - rate;
    if keep <= 0.0 {
        return vec![S::zero(); len];
    }
    let scale = S::from_f64(1.0 / keep);
    (0..len)
        .map(|_| if rng.bernoulli(keep) { scale } else { S::zero() })
        .collect()
}

impl<S: Scalar> StepMasks<S> {
    /// Fresh masks for one step; `None` when both rates are zero.
    pub fn sample(
        embed_dim: usize,
        hidden: usize,
        layers: usize,
        embed_rate: f64,
        lstm_rate: f64,
        rng: &mut Rng,
    ) -> Option<Self> {
        if embed_rate <= 0.0 && (lstm_rate <= 0.0 || layers < 2) {
            return None;
        }
        let embed = (embed_rate > 0.0).then(|| sample_mask(embed_dim, embed_rate, rng));
        let inter = (1..layers)
            .map(|_| (lstm_rate > 0.0).then(|| sample_mask(hidden, lstm_rate, rng)))
            .collect();
        Some(StepMasks { embed, inter })
    }
}

#[inline]
fn sigmoid<S: Scalar>(x: S) -> S {
    S::one() / (S::one() + (-x).exp())
}

/// One LSTM cell step: gates `[i, f, g, o]`, `c' = f*c + i*g`, `h' = o*tanh(c')`.
pub fn lstm_cell_step<S: Scalar>(
    layer: &LstmLayerParams<S>,
    x: &[S],
    h_prev: &[S],
    c_prev: &[S],
) -> Result<(Vec<S>, Vec<S>, CellActivations<S>)> {
    let h = layer.hidden();
    if x.len() != layer.input_dim() || h_prev.len() != h || c_prev.len() != h {
        return Err(Error::shape(
            "lstm_cell_step",
            format!(
                "input {} (expected {}), h {} c {} (expected {})",
                x.len(),
                layer.input_dim(),
                h_prev.len(),
                c_prev.len(),
                h
            ),
        ));
    }
    let mut gates: Vec<S> = layer.bias.as_slice().to_vec();
    layer.w_x.matvec_add(x, &mut gates);
    layer.w_h.matvec_add(h_prev, &mut gates);
    for k in 0..h {
        gates[k] = sigmoid(gates[k]);
        gates[h + k] = sigmoid(gates[h + k]);
        gates[2 * h + k] = gates[2 * h + k].tanh();
        gates[3 * h + k] = sigmoid(gates[3 * h + k]);
    }
    let mut c_new = vec![S::zero(); h];
    let mut tanh_c = vec![S::zero(); h];
    let mut h_new = vec![S::zero(); h];
    for k in 0..h {
        c_new[k] = gates[h + k] * c_prev[k] + gates[k] * gates[2 * h + k];
        tanh_c[k] = c_new[k].tanh();
        h_new[k] = gates[3 * h + k] * tanh_c[k];
        // |h| <= 1 structurally: |tanh| <= 1 and o in (0,1)
        debug_assert!(h_new[k].abs() <= S::one());
    }
    Ok((h_new, c_new, CellActivations { gates, tanh_c }))
}

fn apply_mask<S: Scalar>(v: &[S], mask: &Option<Vec<S>>) -> Vec<S> {
    match mask {
        Some(m) => v.iter().zip(m.iter()).map(|(&a, &b)| a * b).collect(),
        None => v.to_vec(),
    }
}

/// Advance the whole stack by one input. Layer `l` consumes the (masked)
/// fresh output of layer `l-1`; the embedding mask applies to `input` first.
/// Returns per-layer caches when `record` is set.
pub fn lstm_stack_step<S: Scalar>(
    layers: &[LstmLayerParams<S>],
    input: &[S],
    state: &mut LstmState<S>,
    masks: Option<StepMasks<S>>,
    record: bool,
) -> Result<Option<Vec<LayerStepTape<S>>>> {
    if layers.is_empty() {
        return Err(Error::Contract("lstm_stack_step: no layers".into()));
    }
    let mut tapes: Option<Vec<LayerStepTape<S>>> = record.then(Vec::new);
    let empty = StepMasks {
        embed: None,
        inter: Vec::new(),
    };
    let masks = masks.unwrap_or(empty);
    let mut x = apply_mask(input, &masks.embed);
    let mut used_mask = masks.embed;
    let mut inter = masks.inter.into_iter();
    for (l, layer) in layers.iter().enumerate() {
        let h_prev = std::mem::take(&mut state.h[l]);
        let c_prev = std::mem::take(&mut state.c[l]);
        let (h_new, c_new, act) = lstm_cell_step(layer, &x, &h_prev, &c_prev)?;
        state.h[l] = h_new;
        state.c[l] = c_new;
        let next_mask = inter.next().flatten();
        let next_x = if l + 1 < layers.len() {
            apply_mask(&state.h[l], &next_mask)
        } else {
            Vec::new()
        };
        if let Some(t) = tapes.as_mut() {
            t.push(LayerStepTape {
                x,
                h_prev,
                c_prev,
                act,
                mask: used_mask,
            });
        }
        x = next_x;
        used_mask = next_mask;
    }
    Ok(tapes)
}

/// Embedding lookup plus one stack step; the standard per-token forward.
pub fn forward_token<S: Scalar>(
    params: &ModelParams<S>,
    token: u32,
    state: &mut LstmState<S>,
    masks: Option<StepMasks<S>>,
    record: bool,
) -> Result<Option<StepTape<S>>> {
    let x = params.embedding.lookup(token)?.to_vec();
    let layers = lstm_stack_step(&params.lstm, &x, state, masks, record)?;
    Ok(layers.map(|layers| StepTape { token, layers }))
}

/// Backpropagation through time over the recorded steps.
///
/// `dh_top` holds upstream gradients w.r.t. the top-layer hidden state at
/// given step indices (the classification loss injects at the final step;
/// optional policy-to-state flow injects at decision steps). Gradients
/// accumulate into `grads`, including embedding rows when trainable.
pub fn lstm_backward<S: Scalar>(
    params: &ModelParams<S>,
    tape: &Tape<S>,
    dh_top: &[(usize, Vec<S>)],
    grads: &mut ModelParams<S>,
) -> Result<()> {
    let n_layers = params.lstm.len();
    let steps = &tape.steps;
    for (t, _) in dh_top {
        if *t >= steps.len() {
            return Err(Error::Contract(format!(
                "lstm_backward: upstream gradient at step {} but only {} cached",
                t,
                steps.len()
            )));
        }
    }
    let hdim = params.lstm[0].hidden();
    let mut dh_carry: Vec<Vec<S>> = vec![vec![S::zero(); hdim]; n_layers];
    let mut dc_carry: Vec<Vec<S>> = vec![vec![S::zero(); hdim]; n_layers];
    // per-layer dpre rows, appended in reverse step order; the weight-gradient
    // outer products apply once per episode, batched, after the walk
    let mut dpre_store: Vec<Vec<S>> = vec![Vec::with_capacity(steps.len() * 4 * hdim); n_layers];
    let mut dpre = vec![S::zero(); 4 * hdim];
    for t in (0..steps.len()).rev() {
        let step = &steps[t];
        let mut dx_from_above: Option<Vec<S>> = None;
        for l in (0..n_layers).rev() {
            let lt = &step.layers[l];
            let layer = &params.lstm[l];
            let mut dh = std::mem::take(&mut dh_carry[l]);
            if l == n_layers - 1 {
                for (ti, g) in dh_top {
                    if *ti == t {
                        for (a, b) in dh.iter_mut().zip(g.iter()) {
                            *a = *a + *b;
                        }
                    }
                }
            }
            if let Some(dxa) = dx_from_above.take() {
                for (a, b) in dh.iter_mut().zip(dxa.iter()) {
                    *a = *a + *b;
                }
            }
            let gates = &lt.act.gates;
            let tanh_c = &lt.act.tanh_c;
            let mut dc_prev = vec![S::zero(); hdim];
            for k in 0..hdim {
                let gi = gates[k];
                let gf = gates[hdim + k];
                let gg = gates[2 * hdim + k];
                let go = gates[3 * hdim + k];
                let tc = tanh_c[k];
                let d_o = dh[k] * tc;
                let dc_total = dc_carry[l][k] + dh[k] * go * (S::one() - tc * tc);
                let d_i = dc_total * gg;
                let d_f = dc_total * lt.c_prev[k];
                let d_g = dc_total * gi;
                dpre[k] = d_i * gi * (S::one() - gi);
                dpre[hdim + k] = d_f * gf * (S::one() - gf);
                dpre[2 * hdim + k] = d_g * (S::one() - gg * gg);
                dpre[3 * hdim + k] = d_o * go * (S::one() - go);
                dc_prev[k] = dc_total * gf;
            }
            dc_carry[l] = dc_prev;
            dpre_store[l].extend_from_slice(&dpre);
            for (b, d) in grads.lstm[l].bias.as_mut_slice().iter_mut().zip(dpre.iter()) {
                *b = *b + *d;
            }
            let mut carry = vec![S::zero(); hdim];
            layer.w_h.matvec_t_add(&dpre, &mut carry);
            dh_carry[l] = carry;
            let mut dx = vec![S::zero(); layer.input_dim()];
            layer.w_x.matvec_t_add(&dpre, &mut dx);
            if let Some(m) = &lt.mask {
                for (a, b) in dx.iter_mut().zip(m.iter()) {
                    *a = *a * *b;
                }
            }
            if l == 0 {
                if params.embedding.trainable {
                    let row = grads.embedding.table.row_mut(step.token as usize);
                    for (a, b) in row.iter_mut().zip(dx.iter()) {
                        *a = *a + *b;
                    }
                }
            } else {
                dx_from_above = Some(dx);
            }
        }
    }
    for l in 0..n_layers {
        let store = &dpre_store[l];
        if store.is_empty() {
            continue;
        }
        let dpre_rows: Vec<&[S]> = store.chunks_exact(4 * hdim).collect();
        // rows were pushed in reverse step order
        let xs: Vec<&[S]> = (0..steps.len())
            .rev()
            .map(|t| steps[t].layers[l].x.as_slice())
            .collect();
        let h_prevs: Vec<&[S]> = (0..steps.len())
            .rev()
            .map(|t| steps[t].layers[l].h_prev.as_slice())
            .collect();
        grads.lstm[l].w_x.add_outer_batch(&dpre_rows, &xs);
        grads.lstm[l].w_h.add_outer_batch(&dpre_rows, &h_prevs);
    }
    Ok(())
}
