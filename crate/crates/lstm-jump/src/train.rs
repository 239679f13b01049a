//! Adam optimization, global-norm clipping, curriculum scheduling, the
//! per-batch training step, and evaluation.

use crate::data::Example;
use crate::error::{Error, Result};
use crate::jump::{
    read_all, rollout, JumpConfig, RolloutMode, RolloutOptions, RolloutOutput, TerminationReason,
};
use crate::model::{
    argmax, classify, classify_backward, qa_backward, qa_score, ModelParams,
};
use crate::numeric::{clip_global_norm, Matrix, Rng, Scalar};
use crate::rl::{
    baseline_backward, baseline_value, batch_mean, policy_backward, reinforce_surrogate, reward,
    total_loss, LossBreakdown,
};
use std::collections::VecDeque;
use std::time::Instant;

/// Adam moment estimates, one pair per model tensor in visit order.
#[derive(Debug, Clone)]
pub struct AdamState<S> {
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    pub t: u64,
    pub moments: Vec<(Matrix<S>, Matrix<S>)>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &ModelParams<S>, lr: f64) -> Self {
        AdamState {
            lr: S::from_f64(lr),
            beta1: S::from_f64(0.9),
            beta2: S::from_f64(0.999),
            eps: S::from_f64(1e-8),
            t: 0,
            moments: params
                .visit()
                .iter()
                .map(|(_, m, _)| {
                    (
                        Matrix::zeros(m.rows(), m.cols()),
                        Matrix::zeros(m.rows(), m.cols()),
                    )
                })
                .collect(),
        }
    }
}

/// One Adam update over every trainable tensor. `grads` must mirror `params`.
pub fn adam_step<S: Scalar>(
    state: &mut AdamState<S>,
    params: &mut ModelParams<S>,
    grads: &ModelParams<S>,
) {
    state.t += 1;
    let b1 = state.beta1;
    let b2 = state.beta2;
    let bias1 = S::one() - S::from_f64(state.beta1.as_f64().powi(state.t as i32));
    let bias2 = S::one() - S::from_f64(state.beta2.as_f64().powi(state.t as i32));
    let g_list = grads.visit();
    for (((_, p, trainable), (m, v)), (_, g, _)) in params
        .visit_mut()
        .into_iter()
        .zip(state.moments.iter_mut())
        .zip(g_list)
    {
        if !trainable {
            continue;
        }
        let pd = p.as_mut_slice();
        let md = m.as_mut_slice();
        let vd = v.as_mut_slice();
        let gd = g.as_slice();
        for i in 0..pd.len() {
            md[i] = b1 * md[i] + (S::one() - b1) * gd[i];
            vd[i] = b2 * vd[i] + (S::one() - b2) * gd[i] * gd[i];
            let m_hat = md[i] / bias1;
            let v_hat = vd[i] / bias2;
            pd[i] = pd[i] - state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
}

/// Progressively longer sequence lengths, advanced on windowed train accuracy.
#[derive(Debug, Clone)]
pub struct CurriculumSchedule {
    pub lengths: Vec<usize>,
    pub advance_threshold: f64,
    pub window: usize,
    pub stage: usize,
    recent: VecDeque<f64>,
}

impl CurriculumSchedule {
    pub fn new(lengths: Vec<usize>, advance_threshold: f64, window: usize) -> Self {
        CurriculumSchedule {
            lengths,
            advance_threshold,
            window: window.max(1),
            stage: 0,
            recent: VecDeque::new(),
        }
    }

    pub fn current_len(&self) -> usize {
        self.lengths[self.stage]
    }

    pub fn at_final_stage(&self) -> bool {
        self.stage + 1 >= self.lengths.len()
    }

    /// Record one batch accuracy; advances (and clears the window) when the
    /// full window's mean reaches the threshold. Returns true on advance.
    pub fn observe_batch(&mut self, accuracy: f64) -> bool {
        self.recent.push_back(accuracy);
        if self.recent.len() > self.window {
            self.recent.pop_front();
        }
        if self.recent.len() == self.window {
            let mean = self.recent.iter().sum::<f64>() / self.window as f64;
            if curriculum_advance(self, mean) {
                self.recent.clear();
                return true;
            }
        }
        false
    }

    pub fn windowed_accuracy(&self) -> f64 {
        if self.recent.is_empty() {
            0.0
        } else {
            self.recent.iter().sum::<f64>() / self.recent.len() as f64
        }
    }
}

/// Advance one stage when the windowed accuracy reaches the threshold and a
/// longer stage exists. Never regresses.
pub fn curriculum_advance(schedule: &mut CurriculumSchedule, recent_train_acc: f64) -> bool {
    if recent_train_acc >= schedule.advance_threshold && !schedule.at_final_stage() {
        schedule.stage += 1;
        true
    } else {
        false
    }
}

/// How examples are fed to the reader.
#[derive(Debug, Clone, Copy)]
pub struct ReaderSpec {
    /// Word tokens per jump unit.
    pub span: usize,
    /// Leading tokens (a QA query) read before unit 1.
    pub prefix: usize,
    /// Score candidates with the bilinear head instead of the classifier.
    pub qa: bool,
}

impl Default for ReaderSpec {
    fn default() -> Self {
        ReaderSpec {
            span: 1,
            prefix: 0,
            qa: false,
        }
    }
}

/// Per-batch training knobs.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub clip_threshold: f64,
    pub lstm_dropout: f64,
    pub embed_dropout: f64,
    pub jump: JumpConfig,
    /// false = plain-LSTM baseline: same code path, no jumping, no policy or
    /// baseline loss terms.
    pub jump_enabled: bool,
    pub entropy_weight: f64,
    /// Let the policy surrogate's gradient flow into the LSTM through the
    /// decision hidden states. Off by default; the surrogate then trains only
    /// the jump head.
    pub joint_flow: bool,
    pub threads: usize,
    pub reader: ReaderSpec,
}

/// What a single optimizer step produced.
#[derive(Debug, Clone, Copy)]
pub struct StepMetrics {
    pub loss: LossBreakdown<f32>,
    pub accuracy: f64,
    pub grad_norm: f64,
    pub avg_tokens: f64,
}

struct EpisodeOutcome {
    loss: LossBreakdown<f32>,
    correct: bool,
    tokens_read: usize,
}

fn run_episode(
    model: &ModelParams<f32>,
    example: &Example,
    cfg: &TrainConfig,
    rng: &mut Rng,
    grads: &mut ModelParams<f32>,
) -> Result<EpisodeOutcome> {
    let opts = RolloutOptions {
        mode: RolloutMode::Sample,
        record: true,
        embed_dropout: cfg.embed_dropout,
        lstm_dropout: cfg.lstm_dropout,
        span: cfg.reader.span,
        prefix: cfg.reader.prefix,
    };
    let out: RolloutOutput<f32> = if cfg.jump_enabled {
        rollout(model, &example.tokens, &cfg.jump, &opts, rng)?
    } else {
        read_all(model, &example.tokens, &opts, rng)?
    };
    let tape = out.tape.as_ref().expect("recording rollout");
    let h_final = out.state.top_h().to_vec();

    // task head forward + backward
    let (probs, prediction, dh_final) = if cfg.reader.qa {
        let cand = example
            .candidates
            .as_ref()
            .ok_or_else(|| Error::Contract("QA example without candidates".into()))?;
        let mut rows = Vec::with_capacity(cand.len() * model.embedding.table.cols());
        for &c in cand {
            rows.extend_from_slice(model.embedding.lookup(c)?);
        }
        let candidates = Matrix::from_vec(cand.len(), model.embedding.table.cols(), rows)?;
        let probs = qa_score(&model.qa, &candidates, &h_final)?;
        let prediction = argmax(&probs);
        let dh = qa_backward(
            &model.qa,
            &candidates,
            cand,
            &h_final,
            &probs,
            example.label,
            grads,
            model.embedding.trainable,
        );
        (probs, prediction, dh)
    } else {
        let probs = classify(&model.cls, &h_final)?;
        let prediction = argmax(&probs);
        let dh = classify_backward(&model.cls, &h_final, &probs, example.label, &mut grads.cls);
        (probs, prediction, dh)
    };
    let j1 = -probs[example.label].max(1e-30).ln();

    let mut injections: Vec<(usize, Vec<f32>)> = Vec::with_capacity(2);
    let loss = if cfg.jump_enabled {
        let r: f32 = reward(prediction, example.label);
        let baselines: Vec<f32> = out
            .trace
            .jumps
            .iter()
            .map(|j| baseline_value(&model.baseline, &j.hidden))
            .collect();
        let advantages: Vec<f32> = baselines.iter().map(|b| r - b).collect();
        let surrogate = reinforce_surrogate(&out.trace, r, &baselines)?;
        let sq: Vec<f32> = advantages.iter().map(|a| a * a).collect();
        let mut loss = total_loss(j1, surrogate, &sq);
        let mut dh_sink = cfg.joint_flow.then(Vec::new);
        policy_backward(
            &model.jump,
            &out.trace,
            &advantages,
            cfg.entropy_weight as f32,
            &mut grads.jump,
            dh_sink.as_mut(),
        )?;
        if let Some(sink) = dh_sink {
            injections.extend(sink);
        }
        if cfg.entropy_weight > 0.0 {
            let beta = cfg.entropy_weight as f32;
            let mut ent = 0.0f32;
            for j in &out.trace.jumps {
                ent -= j
                    .dist
                    .iter()
                    .map(|&p| p * p.max(1e-30).ln())
                    .sum::<f32>();
            }
            loss.entropy_term = -beta * ent;
            loss.total += loss.entropy_term;
        }
        baseline_backward(&out.trace, r, &baselines, &mut grads.baseline)?;
        loss
    } else {
        total_loss(j1, 0.0, &[])
    };

    if !tape.is_empty() {
        injections.push((tape.len() - 1, dh_final));
        crate::model::lstm_backward(model, tape, &injections, grads)?;
    }

    Ok(EpisodeOutcome {
        loss,
        correct: prediction == example.label,
        tokens_read: out.trace.tokens_read,
    })
}

fn run_chunk(
    model: &ModelParams<f32>,
    batch: &[Example],
    range: std::ops::Range<usize>,
    cfg: &TrainConfig,
    episode_rng: &Rng,
    step_index: u64,
) -> Result<(ModelParams<f32>, Vec<EpisodeOutcome>)> {
    let mut grads = model.zeros_like();
    let mut outcomes = Vec::with_capacity(range.len());
    for i in range {
        let mut rng = episode_rng.substream2(step_index, i as u64);
        outcomes.push(run_episode(model, &batch[i], cfg, &mut rng, &mut grads)?);
    }
    Ok((grads, outcomes))
}

/// One optimizer step over a batch: sampled rollouts with dropout, reward and
/// loss assembly, mean gradients, global-norm clipping at the configured
/// threshold, then a single Adam update over all trainable parameters.
pub fn train_step(
    model: &mut ModelParams<f32>,
    adam: &mut AdamState<f32>,
    batch: &[Example],
    cfg: &TrainConfig,
    episode_rng: &Rng,
    step_index: u64,
) -> Result<StepMetrics> {
    if batch.is_empty() {
        return Err(Error::Contract("train_step: empty batch".into()));
    }
    let threads = cfg.threads.max(1).min(batch.len());
    let (mut grads, outcomes) = if threads == 1 {
        run_chunk(model, batch, 0..batch.len(), cfg, episode_rng, step_index)?
    } else {
        let chunk = batch.len().div_ceil(threads);
        let shared: &ModelParams<f32> = model;
        let results: Vec<Result<(ModelParams<f32>, Vec<EpisodeOutcome>)>> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..threads)
                    .map(|w| {
                        let lo = w * chunk;
                        let hi = ((w + 1) * chunk).min(batch.len());
                        scope.spawn(move || {
                            run_chunk(shared, batch, lo..hi, cfg, episode_rng, step_index)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            });
        let mut merged_grads: Option<ModelParams<f32>> = None;
        let mut merged_outcomes = Vec::with_capacity(batch.len());
        for r in results {
            let (g, o) = r?;
            match merged_grads.as_mut() {
                None => merged_grads = Some(g),
                Some(acc) => {
                    for ((_, a, _), (_, b, _)) in
                        acc.visit_mut().into_iter().zip(g.visit())
                    {
                        a.add_scaled(b, 1.0);
                    }
                }
            }
            merged_outcomes.extend(o);
        }
        (merged_grads.unwrap(), merged_outcomes)
    };

    let inv = 1.0f32 / batch.len() as f32;
    for (_, g, _) in grads.visit_mut() {
        g.scale(inv);
    }
    let losses: Vec<LossBreakdown<f32>> = outcomes.iter().map(|o| o.loss).collect();
    let loss = batch_mean(&losses);
    if !loss.is_finite() {
        return Err(Error::Diverged(format!(
            "non-finite loss at step {step_index}: {loss:?}"
        )));
    }
    let grad_norm = {
        let mut list = grads.visit_mut();
        let mut refs: Vec<&mut Matrix<f32>> = list.iter_mut().map(|(_, m, _)| &mut **m).collect();
        clip_global_norm(&mut refs, cfg.clip_threshold as f32)
    };
    adam_step(adam, model, &grads);
    if !model.all_finite() {
        return Err(Error::Diverged(format!(
            "non-finite parameters after step {step_index}"
        )));
    }
    let correct = outcomes.iter().filter(|o| o.correct).count();
    let tokens: usize = outcomes.iter().map(|o| o.tokens_read).sum();
    Ok(StepMetrics {
        loss,
        accuracy: correct as f64 / batch.len() as f64,
        grad_norm: grad_norm.as_f64(),
        avg_tokens: tokens as f64 / batch.len() as f64,
    })
}

/// Evaluation knobs.
#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub jump: JumpConfig,
    pub jump_enabled: bool,
    pub mode: RolloutMode,
    pub reader: ReaderSpec,
    pub threads: usize,
}

/// Accuracy / tokens-read / timing report for one dataset pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub avg_tokens_read: f64,
    /// Seconds for the full pass, instance by instance.
    pub wall_time: f64,
    pub n: usize,
    pub zero_jump: usize,
    pub max_jumps: usize,
    pub end_of_sequence: usize,
}

fn eval_episode(
    model: &ModelParams<f32>,
    example: &Example,
    cfg: &EvalSettings,
    rng: &mut Rng,
) -> Result<(bool, usize, TerminationReason)> {
    let opts = RolloutOptions {
        mode: cfg.mode,
        record: false,
        embed_dropout: 0.0,
        lstm_dropout: 0.0,
        span: cfg.reader.span,
        prefix: cfg.reader.prefix,
    };
    let out = if cfg.jump_enabled {
        rollout(model, &example.tokens, &cfg.jump, &opts, rng)?
    } else {
        read_all(model, &example.tokens, &opts, rng)?
    };
    let h = out.state.top_h();
    let prediction = if cfg.reader.qa {
        let cand = example
            .candidates
            .as_ref()
            .ok_or_else(|| Error::Contract("QA example without candidates".into()))?;
        let mut rows = Vec::with_capacity(cand.len() * model.embedding.table.cols());
        for &c in cand {
            rows.extend_from_slice(model.embedding.lookup(c)?);
        }
        let candidates = Matrix::from_vec(cand.len(), model.embedding.table.cols(), rows)?;
        argmax(&qa_score(&model.qa, &candidates, h)?)
    } else {
        argmax(&classify(&model.cls, h)?)
    };
    Ok((
        prediction == example.label,
        out.trace.tokens_read,
        out.trace.termination,
    ))
}

/// One pass over a dataset, instance by instance: dropout off, sampling mode
/// by default (greedy on request). Never mutates the model.
pub fn evaluate(
    model: &ModelParams<f32>,
    examples: &[Example],
    cfg: &EvalSettings,
    eval_rng: &Rng,
) -> Result<EvalReport> {
    let start = Instant::now();
    let threads = cfg.threads.max(1).min(examples.len().max(1));
    let run_range = |range: std::ops::Range<usize>| -> Result<(usize, usize, [usize; 3])> {
        let mut correct = 0usize;
        let mut tokens = 0usize;
        let mut terms = [0usize; 3];
        for i in range {
            let mut rng = eval_rng.substream(i as u64);
            let (ok, t, term) = eval_episode(model, &examples[i], cfg, &mut rng)?;
            correct += ok as usize;
            tokens += t;
            terms[match term {
                TerminationReason::ZeroJump => 0,
                TerminationReason::MaxJumps => 1,
                TerminationReason::EndOfSequence => 2,
            }] += 1;
        }
        Ok((correct, tokens, terms))
    };
    let (correct, tokens, terms) = if threads <= 1 || examples.is_empty() {
        run_range(0..examples.len())?
    } else {
        let chunk = examples.len().div_ceil(threads);
        let results: Vec<Result<(usize, usize, [usize; 3])>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|w| {
                    let lo = w * chunk;
                    let hi = ((w + 1) * chunk).min(examples.len());
                    let run = &run_range;
                    scope.spawn(move || run(lo..hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut acc = (0usize, 0usize, [0usize; 3]);
        for r in results {
            let (c, t, tm) = r?;
            acc.0 += c;
            acc.1 += t;
            for k in 0..3 {
                acc.2[k] += tm[k];
            }
        }
        acc
    };
    let n = examples.len().max(1);
    Ok(EvalReport {
        accuracy: correct as f64 / n as f64,
        avg_tokens_read: tokens as f64 / n as f64,
        wall_time: start.elapsed().as_secs_f64(),
        n: examples.len(),
        zero_jump: terms[0],
        max_jumps: terms[1],
        end_of_sequence: terms[2],
    })
}
