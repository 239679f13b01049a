//! Model parameters and task heads: embedding lookup, multi-layer LSTM,
//! dropout, classification softmax and the bilinear QA scorer.

mod lstm;

pub use lstm::{
    forward_token, lstm_backward, lstm_cell_step, lstm_stack_step, CellActivations,
    LayerStepTape, StepMasks, StepTape, Tape,
};

use crate::error::{Error, Result};
use crate::jump::JumpHead;
use crate::numeric::{softmax, Matrix, Rng, Scalar};
use crate::rl::BaselineParams;

/// Per-layer LSTM weights. The packed `4h` dimension uses gate order
/// `[input i, forget f, cell g, output o]`; checkpoints expose this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams<S> {
    /// `4h x input_dim`
    pub w_x: Matrix<S>,
    /// `4h x h`
    pub w_h: Matrix<S>,
    /// `4h x 1`
    pub bias: Matrix<S>,
}

impl<S: Scalar> LstmLayerParams<S> {
    pub fn hidden(&self) -> usize {
        self.w_h.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.cols()
    }
}

/// Hidden and cell state for every layer of the stack.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<S> {
    pub h: Vec<Vec<S>>,
    pub c: Vec<Vec<S>>,
}

impl<S: Scalar> LstmState<S> {
    pub fn zeros(layers: usize, hidden: usize) -> Self {
        LstmState {
            h: vec![vec![S::zero(); hidden]; layers],
            c: vec![vec![S::zero(); hidden]; layers],
        }
    }

    /// Hidden state of the top layer.
    pub fn top_h(&self) -> &[S] {
        self.h.last().expect("at least one layer")
    }
}

/// Token embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<S> {
    /// `vocab x embed_dim`
    pub table: Matrix<S>,
    pub trainable: bool,
}

impl<S: Scalar> Embedding<S> {
    pub fn lookup(&self, token: u32) -> Result<&[S]> {
        if (token as usize) < self.table.rows() {
            Ok(self.table.row(token as usize))
        } else {
            Err(Error::Contract(format!(
                "embedding lookup {} out of vocab {}",
                token,
                self.table.rows()
            )))
        }
    }
}

/// Linear + softmax classification head.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead<S> {
    /// `num_classes x h`
    pub w: Matrix<S>,
    /// `num_classes x 1`
    pub bias: Matrix<S>,
}

/// Bilinear scorer for candidate-answer selection: `softmax(C W h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearQaHead<S> {
    /// `embed_dim x h`
    pub w: Matrix<S>,
}

/// Static sizes of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub layers: usize,
    pub classes: usize,
    /// Maximum jump size K; the jump head has K+1 outputs (0 = stop).
    pub max_jump: usize,
}

/// Every trainable tensor of the model, including the jump policy head and
/// the reward baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    pub embedding: Embedding<S>,
    pub lstm: Vec<LstmLayerParams<S>>,
    pub jump: JumpHead<S>,
    pub cls: ClassifierHead<S>,
    pub qa: BilinearQaHead<S>,
    pub baseline: BaselineParams<S>,
}

const WEIGHT_INIT: f64 = 0.08;
const EMBED_INIT: f64 = 0.25;

impl<S: Scalar> ModelParams<S> {
    /// Fresh model: weights uniform in `[-0.08, 0.08]`, embeddings uniform in
    /// `[-0.25, 0.25]`, forget-gate bias 1.0, baseline zeroed.
    pub fn init(dims: &ModelDims, rng: &mut Rng) -> Self {
        let h = dims.hidden;
        let mut lstm = Vec::with_capacity(dims.layers);
        for layer in 0..dims.layers {
            let input = if layer == 0 { dims.embed } else { h };
            let mut bias = Matrix::zeros(4 * h, 1);
            for r in h..2 * h {
                bias.set(r, 0, S::one()); // forget gate opens early
            }
            lstm.push(LstmLayerParams {
                w_x: Matrix::uniform(4 * h, input, -WEIGHT_INIT, WEIGHT_INIT, rng),
                w_h: Matrix::uniform(4 * h, h, -WEIGHT_INIT, WEIGHT_INIT, rng),
                bias,
            });
        }
        ModelParams {
            embedding: Embedding {
                table: Matrix::uniform(dims.vocab, dims.embed, -EMBED_INIT, EMBED_INIT, rng),
                trainable: true,
            },
            lstm,
            jump: JumpHead {
                w: Matrix::uniform(dims.max_jump + 1, h, -WEIGHT_INIT, WEIGHT_INIT, rng),
                bias: Matrix::zeros(dims.max_jump + 1, 1),
            },
            cls: ClassifierHead {
                w: Matrix::uniform(dims.classes, h, -WEIGHT_INIT, WEIGHT_INIT, rng),
                bias: Matrix::zeros(dims.classes, 1),
            },
            qa: BilinearQaHead {
                w: Matrix::uniform(dims.embed, h, -WEIGHT_INIT, WEIGHT_INIT, rng),
            },
            baseline: BaselineParams {
                w: Matrix::zeros(h, 1),
                c: Matrix::zeros(1, 1),
            },
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            vocab: self.embedding.table.rows(),
            embed: self.embedding.table.cols(),
            hidden: self.lstm[0].hidden(),
            layers: self.lstm.len(),
            classes: self.cls.w.rows(),
            max_jump: self.jump.w.rows() - 1,
        }
    }

    /// Same shapes, all zeros; used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for (_, t, _) in z.visit_mut() {
            t.fill(S::zero());
        }
        z
    }

    /// Tensor lookup by checkpoint name; panics on unknown names.
    pub fn get_named(&self, name: &str) -> Matrix<S> {
        self.visit()
            .into_iter()
            .find(|(n, _, _)| n == name)
            .unwrap_or_else(|| panic!("no tensor named {name}"))
            .1
            .clone()
    }

    /// Named tensors in checkpoint order. The `bool` is the trainable flag.
    pub fn visit(&self) -> Vec<(String, &Matrix<S>, bool)> {
        let mut out: Vec<(String, &Matrix<S>, bool)> = Vec::new();
        out.push(("embedding".into(), &self.embedding.table, self.embedding.trainable));
        for (i, layer) in self.lstm.iter().enumerate() {
            out.push((format!("lstm.{i}.w_x"), &layer.w_x, true));
            out.push((format!("lstm.{i}.w_h"), &layer.w_h, true));
            out.push((format!("lstm.{i}.bias"), &layer.bias, true));
        }
        out.push(("jump.w".into(), &self.jump.w, true));
        out.push(("jump.bias".into(), &self.jump.bias, true));
        out.push(("cls.w".into(), &self.cls.w, true));
        out.push(("cls.bias".into(), &self.cls.bias, true));
        out.push(("qa.w".into(), &self.qa.w, true));
        out.push(("baseline.w".into(), &self.baseline.w, true));
        out.push(("baseline.c".into(), &self.baseline.c, true));
        out
    }

    pub fn visit_mut(&mut self) -> Vec<(String, &mut Matrix<S>, bool)> {
        let embed_trainable = self.embedding.trainable;
        let mut out: Vec<(String, &mut Matrix<S>, bool)> = Vec::new();
        out.push(("embedding".into(), &mut self.embedding.table, embed_trainable));
        for (i, layer) in self.lstm.iter_mut().enumerate() {
            out.push((format!("lstm.{i}.w_x"), &mut layer.w_x, true));
            out.push((format!("lstm.{i}.w_h"), &mut layer.w_h, true));
            out.push((format!("lstm.{i}.bias"), &mut layer.bias, true));
        }
        out.push(("jump.w".into(), &mut self.jump.w, true));
        out.push(("jump.bias".into(), &mut self.jump.bias, true));
        out.push(("cls.w".into(), &mut self.cls.w, true));
        out.push(("cls.bias".into(), &mut self.cls.bias, true));
        out.push(("qa.w".into(), &mut self.qa.w, true));
        out.push(("baseline.w".into(), &mut self.baseline.w, true));
        out.push(("baseline.c".into(), &mut self.baseline.c, true));
        out
    }

    pub fn all_finite(&self) -> bool {
        self.visit().iter().all(|(_, t, _)| t.all_finite())
    }

    pub fn cast<T: Scalar>(&self) -> ModelParams<T> {
        ModelParams {
            embedding: Embedding {
                table: self.embedding.table.cast(),
                trainable: self.embedding.trainable,
            },
            lstm: self
                .lstm
                .iter()
                .map(|l| LstmLayerParams {
                    w_x: l.w_x.cast(),
                    w_h: l.w_h.cast(),
                    bias: l.bias.cast(),
                })
                .collect(),
            jump: JumpHead {
                w: self.jump.w.cast(),
                bias: self.jump.bias.cast(),
            },
            cls: ClassifierHead {
                w: self.cls.w.cast(),
                bias: self.cls.bias.cast(),
            },
            qa: BilinearQaHead { w: self.qa.w.cast() },
            baseline: BaselineParams {
                w: self.baseline.w.cast(),
                c: self.baseline.c.cast(),
            },
        }
    }
}

/// Class probabilities from a hidden state: `softmax(W h + bias)`.
pub fn classify<S: Scalar>(head: &ClassifierHead<S>, h: &[S]) -> Result<Vec<S>> {
    if head.w.cols() != h.len() {
        return Err(Error::shape(
            "classify",
            format!("head expects h of {}, got {}", head.w.cols(), h.len()),
        ));
    }
    let mut logits: Vec<S> = head.bias.as_slice().to_vec();
    head.w.matvec_add(h, &mut logits);
    softmax(&logits)
}

/// Candidate probabilities `softmax(C W h)`; rows of `candidates` are the
/// candidate embeddings. Prediction is the argmax index.
pub fn qa_score<S: Scalar>(
    head: &BilinearQaHead<S>,
    candidates: &Matrix<S>,
    h: &[S],
) -> Result<Vec<S>> {
    if head.w.cols() != h.len() || candidates.cols() != head.w.rows() {
        return Err(Error::shape(
            "qa_score",
            format!(
                "candidates {}x{}, W {}x{}, h {}",
                candidates.rows(),
                candidates.cols(),
                head.w.rows(),
                head.w.cols(),
                h.len()
            ),
        ));
    }
    let mut u = vec![S::zero(); head.w.rows()];
    head.w.matvec_add(h, &mut u);
    let mut logits = vec![S::zero(); candidates.rows()];
    candidates.matvec_add(&u, &mut logits);
    softmax(&logits)
}

/// Backward of the cross-entropy classification loss `-ln probs[label]`.
/// Accumulates head gradients and returns the gradient w.r.t. `h`.
pub fn classify_backward<S: Scalar>(
    head: &ClassifierHead<S>,
    h: &[S],
    probs: &[S],
    label: usize,
    head_grads: &mut ClassifierHead<S>,
) -> Vec<S> {
    let mut dlogits: Vec<S> = probs.to_vec();
    dlogits[label] = dlogits[label] - S::one();
    head_grads.w.add_outer(&dlogits, h);
    for (b, d) in head_grads.bias.as_mut_slice().iter_mut().zip(dlogits.iter()) {
        *b = *b + *d;
    }
    let mut dh = vec![S::zero(); h.len()];
    head.w.matvec_t_add(&dlogits, &mut dh);
    dh
}

/// Backward of the bilinear QA cross-entropy `-ln softmax(C W h)[label]`.
/// Accumulates gradients for `W` and (when the embedding is trainable) the
/// candidate embedding rows; returns the gradient w.r.t. `h`.
pub fn qa_backward<S: Scalar>(
    head: &BilinearQaHead<S>,
    candidates: &Matrix<S>,
    candidate_tokens: &[u32],
    h: &[S],
    probs: &[S],
    label: usize,
    grads: &mut ModelParams<S>,
    embedding_trainable: bool,
) -> Vec<S> {
    let mut dlogits: Vec<S> = probs.to_vec();
    dlogits[label] = dlogits[label] - S::one();
    // u = W h; logits = C u
    let mut u = vec![S::zero(); head.w.rows()];
    head.w.matvec_add(h, &mut u);
    let mut du = vec![S::zero(); head.w.rows()];
    candidates.matvec_t_add(&dlogits, &mut du);
    grads.qa.w.add_outer(&du, h);
    if embedding_trainable {
        for (i, &tok) in candidate_tokens.iter().enumerate() {
            let row = grads.embedding.table.row_mut(tok as usize);
            for (g, &uv) in row.iter_mut().zip(u.iter()) {
                *g = *g + dlogits[i] * uv;
            }
        }
    }
    let mut dh = vec![S::zero(); h.len()];
    head.w.matvec_t_add(&du, &mut dh);
    dh
}

/// Argmax with ties broken toward the smaller index.
pub fn argmax<S: Scalar>(v: &[S]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
