//! The skimming rollout: read `R` units, emit a distribution over jump sizes
//! `{0..K}`, take one, relocate, and stop on one of three conditions:
//! a stop action (`kappa = 0`), an exhausted jump budget, or the end of the
//! sequence.
//!
//! Positions are 1-indexed "jump units". At word/character level a unit is a
//! single token (`span = 1`); at sentence level the data layer pre-groups each
//! sentence into a fixed-width span of word tokens and the unit is the span.

use crate::error::{Error, Result};
use crate::model::{argmax, forward_token, LstmState, ModelParams, StepMasks, Tape};
use crate::numeric::{sample_categorical, softmax, Matrix, Rng, Scalar};

/// Rollout hyperparameters. `K` is fixed per model (the head has `K+1`
/// outputs); `N` and `R` may differ between training and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JumpConfig {
    /// N: non-zero jumps allowed per episode.
    pub n_jumps: usize,
    /// K: maximum jump size; action 0 means stop.
    pub max_jump: usize,
    /// R: units read before each jump decision.
    pub read_len: usize,
}

impl JumpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_jump < 1 {
            return Err(Error::Config("max_jump (K) must be >= 1".into()));
        }
        if self.read_len < 1 {
            return Err(Error::Config("read_len (R) must be >= 1".into()));
        }
        Ok(())
    }
}

/// Policy head producing the jump softmax; output dimension is `K+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpHead<S> {
    /// `(K+1) x h`
    pub w: Matrix<S>,
    /// `(K+1) x 1`
    pub bias: Matrix<S>,
}

/// Why an episode stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminationReason {
    /// The jump softmax produced action 0.
    ZeroJump,
    /// The jump budget `N` was spent and one final segment was read.
    MaxJumps,
    /// The reader consumed or jumped past the last unit.
    EndOfSequence,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TerminationReason::ZeroJump => "ZeroJump",
            TerminationReason::MaxJumps => "MaxJumps",
            TerminationReason::EndOfSequence => "EndOfSequence",
        };
        f.write_str(s)
    }
}

/// One jump decision and everything the policy-gradient update needs from it.
#[derive(Debug, Clone)]
pub struct JumpDecision<S> {
    /// Top-layer hidden state right before the jump.
    pub hidden: Vec<S>,
    /// Sampled (or forced) action in `0..=K`.
    pub kappa: usize,
    /// `ln dist[kappa]`.
    pub log_prob: S,
    /// Full distribution over `0..=K`.
    pub dist: Vec<S>,
    /// Index of the read step this decision followed (for gradient injection).
    pub step: usize,
}

/// Per-episode record of what was read and which jumps were taken.
#[derive(Debug, Clone)]
pub struct ReadingTrace<S> {
    /// Strictly increasing 1-indexed unit positions.
    pub read_positions: Vec<usize>,
    pub jumps: Vec<JumpDecision<S>>,
    pub termination: TerminationReason,
    /// Number of units read; equals `read_positions.len()`.
    pub tokens_read: usize,
}

/// How jump actions are chosen during a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutMode {
    /// Draw from the jump softmax.
    Sample,
    /// Take the most probable action (ties toward the smaller index).
    Greedy,
    /// Force every decision to this action; used by tests and baselines.
    Fixed(usize),
}

/// Knobs for a single rollout.
#[derive(Debug, Clone, Copy)]
pub struct RolloutOptions {
    pub mode: RolloutMode,
    /// Record forward caches for backpropagation.
    pub record: bool,
    pub embed_dropout: f64,
    pub lstm_dropout: f64,
    /// Word tokens per jump unit (1 except in sentence-span mode).
    pub span: usize,
    /// Leading tokens read unconditionally before unit 1 (a QA query).
    pub prefix: usize,
}

impl Default for RolloutOptions {
    fn default() -> Self {
        RolloutOptions {
            mode: RolloutMode::Sample,
            record: false,
            embed_dropout: 0.0,
            lstm_dropout: 0.0,
            span: 1,
            prefix: 0,
        }
    }
}

/// Result of reading one example.
#[derive(Debug, Clone)]
pub struct RolloutOutput<S> {
    pub state: LstmState<S>,
    pub trace: ReadingTrace<S>,
    pub tape: Option<Tape<S>>,
}

/// Where the next segment starts after jumping `kappa` from `segment_end`
/// (both 1-indexed units). `kappa = 0` is a stop, handled by the caller.
pub fn next_start(segment_end: usize, kappa: usize) -> usize {
    debug_assert!(kappa >= 1, "kappa = 0 terminates, it does not relocate");
    segment_end + kappa
}

/// Most probable action, ties broken toward the smaller index.
pub fn greedy_action<S: Scalar>(dist: &[S]) -> usize {
    argmax(dist)
}

struct Reader<'a, S> {
    params: &'a ModelParams<S>,
    state: LstmState<S>,
    tape: Option<Tape<S>>,
    steps: usize,
    embed_dropout: f64,
    lstm_dropout: f64,
}

impl<S: Scalar> Reader<'_, S> {
    fn feed(&mut self, token: u32, rng: &mut Rng) -> Result<()> {
        let dims = self.params.dims();
        let masks = StepMasks::sample(
            dims.embed,
            dims.hidden,
            dims.layers,
            self.embed_dropout,
            self.lstm_dropout,
            rng,
        );
        let step = forward_token(
            self.params,
            token,
            &mut self.state,
            masks,
            self.tape.is_some(),
        )?;
        if let (Some(tape), Some(step)) = (self.tape.as_mut(), step) {
            tape.steps.push(step);
        }
        self.steps += 1;
        Ok(())
    }
}

fn rollout_core<S: Scalar>(
    params: &ModelParams<S>,
    tokens: &[u32],
    cfg: &JumpConfig,
    opts: &RolloutOptions,
    rng: &mut Rng,
    mut decide: impl FnMut(&[S], &mut Rng) -> Result<Option<usize>>,
) -> Result<Option<RolloutOutput<S>>> {
    cfg.validate()?;
    let span = opts.span.max(1);
    if tokens.len() <= opts.prefix {
        return Err(Error::Contract("rollout: empty token sequence".into()));
    }
    let body = tokens.len() - opts.prefix;
    if body % span != 0 {
        return Err(Error::Contract(format!(
            "rollout: {body} tokens do not divide into spans of {span}"
        )));
    }
    let units = body / span;
    let dims = params.dims();
    if params.jump.w.rows() != cfg.max_jump + 1 {
        return Err(Error::shape(
            "rollout",
            format!(
                "jump head has {} outputs but K+1 = {}",
                params.jump.w.rows(),
                cfg.max_jump + 1
            ),
        ));
    }
    let mut reader = Reader {
        params,
        state: LstmState::zeros(dims.layers, dims.hidden),
        tape: opts.record.then(Tape::new),
        steps: 0,
        embed_dropout: opts.embed_dropout,
        lstm_dropout: opts.lstm_dropout,
    };
    for i in 0..opts.prefix {
        reader.feed(tokens[i], rng)?;
    }

    let mut positions = Vec::new();
    let mut jumps: Vec<JumpDecision<S>> = Vec::new();
    let mut start = 1usize;
    let mut jumps_taken = 0usize;
    let termination = loop {
        let end = (start + cfg.read_len - 1).min(units);
        for unit in start..=end {
            let base = opts.prefix + (unit - 1) * span;
            for t in 0..span {
                reader.feed(tokens[base + t], rng)?;
            }
            positions.push(unit);
        }
        if end == units {
            break TerminationReason::EndOfSequence;
        }
        if jumps_taken == cfg.n_jumps {
            break TerminationReason::MaxJumps;
        }
        let hidden = reader.state.top_h().to_vec();
        let mut logits: Vec<S> = params.jump.bias.as_slice().to_vec();
        params.jump.w.matvec_add(&hidden, &mut logits);
        let dist = softmax(&logits)?;
        let kappa = match decide(&dist, rng)? {
            Some(k) => k,
            None => return Ok(None),
        };
        jumps.push(JumpDecision {
            log_prob: dist[kappa].ln(),
            hidden,
            kappa,
            dist,
            step: reader.steps - 1,
        });
        if kappa == 0 {
            break TerminationReason::ZeroJump;
        }
        jumps_taken += 1;
        start = next_start(end, kappa);
        if start > units {
            break TerminationReason::EndOfSequence;
        }
    };

    let tokens_read = positions.len();
    Ok(Some(RolloutOutput {
        state: reader.state,
        tape: reader.tape,
        trace: ReadingTrace {
            read_positions: positions,
            jumps,
            termination,
            tokens_read,
        },
    }))
}

/// Run one read-and-jump episode over `tokens`.
///
/// Reads segments of up to `R` full units. After each full segment that did
/// not consume the last unit, the top-layer hidden state produces the jump
/// softmax over `{0..K}`: action 0 stops (`ZeroJump`); after the `N`-th
/// non-zero jump the following segment is read and the episode ends without
/// another decision (`MaxJumps`); consuming or jumping past the last unit
/// stops (`EndOfSequence`). The final hidden state is the state after the
/// last token read.
pub fn rollout<S: Scalar>(
    params: &ModelParams<S>,
    tokens: &[u32],
    cfg: &JumpConfig,
    opts: &RolloutOptions,
    rng: &mut Rng,
) -> Result<RolloutOutput<S>> {
    let mode = opts.mode;
    let max_jump = cfg.max_jump;
    let out = rollout_core(params, tokens, cfg, opts, rng, |dist, rng| {
        Ok(Some(match mode {
            RolloutMode::Sample => sample_categorical(dist, rng)?,
            RolloutMode::Greedy => greedy_action(dist),
            RolloutMode::Fixed(k) => k.min(max_jump),
        }))
    })?;
    Ok(out.expect("mode policies always decide"))
}

/// Replay an episode under a fixed action script (used by estimator tests to
/// enumerate every path of a small decision process through the real rollout
/// semantics). Returns `None` when the script is shorter than the episode.
pub fn rollout_scripted<S: Scalar>(
    params: &ModelParams<S>,
    tokens: &[u32],
    cfg: &JumpConfig,
    opts: &RolloutOptions,
    script: &[usize],
) -> Result<Option<RolloutOutput<S>>> {
    let mut next = 0usize;
    let mut rng = Rng::new(0);
    rollout_core(params, tokens, cfg, opts, &mut rng, |_, _| {
        if next < script.len() {
            next += 1;
            Ok(Some(script[next - 1]))
        } else {
            Ok(None)
        }
    })
}

/// Plain sequential read of every unit; the jump-disabled baseline path.
pub fn read_all<S: Scalar>(
    params: &ModelParams<S>,
    tokens: &[u32],
    opts: &RolloutOptions,
    rng: &mut Rng,
) -> Result<RolloutOutput<S>> {
    let span = opts.span.max(1);
    if tokens.len() <= opts.prefix {
        return Err(Error::Contract("read_all: empty token sequence".into()));
    }
    let body = tokens.len() - opts.prefix;
    if body % span != 0 {
        return Err(Error::Contract(format!(
            "read_all: {body} tokens do not divide into spans of {span}"
        )));
    }
    let units = body / span;
    let dims = params.dims();
    let mut reader = Reader {
        params,
        state: LstmState::zeros(dims.layers, dims.hidden),
        tape: opts.record.then(Tape::new),
        steps: 0,
        embed_dropout: opts.embed_dropout,
        lstm_dropout: opts.lstm_dropout,
    };
    for (i, &tok) in tokens.iter().enumerate() {
        let _ = i;
        reader.feed(tok, rng)?;
    }
    Ok(RolloutOutput {
        state: reader.state,
        tape: reader.tape,
        trace: ReadingTrace {
            read_positions: (1..=units).collect(),
            jumps: Vec::new(),
            termination: TerminationReason::EndOfSequence,
            tokens_read: units,
        },
    })
}

/// One `inspect-trace` line:
/// `example_id TAB termination TAB tokens_read TAB positions TAB kappas`.
pub fn trace_line<S: Scalar>(example_id: usize, trace: &ReadingTrace<S>) -> String {
    let positions: Vec<String> = trace.read_positions.iter().map(|p| p.to_string()).collect();
    let kappas: Vec<String> = trace.jumps.iter().map(|j| j.kappa.to_string()).collect();
    format!(
        "{}\t{}\t{}\t{}\t{}",
        example_id,
        trace.termination,
        trace.tokens_read,
        positions.join(","),
        kappas.join(",")
    )
}
