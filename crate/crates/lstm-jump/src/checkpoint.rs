//! Binary checkpoints.
//!
//! Layout: magic `LJMP`, format version (u32 LE), a length-prefixed UTF-8
//! snapshot of the run config, then a count of named tensors, each stored as
//! `{name_len, name, rank, dims..., f32 LE payload}`. Model tensors use the
//! names `embedding`, `lstm.<layer>.w_x|w_h|bias`, `jump.w|bias`, `cls.w|bias`,
//! `qa.w`, `baseline.w|c`; optimizer moments ride along as `adam.m.<name>` /
//! `adam.v.<name>` plus a few `state.*` scalars so training can resume.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::{
    BilinearQaHead, ClassifierHead, Embedding, LstmLayerParams, ModelParams,
};
use crate::jump::JumpHead;
use crate::numeric::Matrix;
use crate::rl::BaselineParams;
use crate::train::AdamState;
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"LJMP";
pub const VERSION: u32 = 1;

/// Training progress stored beside the tensors. `step` is exact up to 2^24
/// (stored as f32 like everything else).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainState {
    pub step: u64,
    pub stage: usize,
    pub epoch: usize,
    pub best_val: f64,
}

impl Default for TrainState {
    fn default() -> Self {
        TrainState {
            step: 0,
            stage: 0,
            epoch: 0,
            best_val: 0.0,
        }
    }
}

/// In-memory checkpoint: the config snapshot plus ordered named tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_text: String,
    pub tensors: Vec<(String, Matrix<f32>)>,
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Option<&Matrix<f32>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let cfg = self.config_text.as_bytes();
        out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
        out.extend_from_slice(cfg);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, m) in &self.tensors {
            let nb = name.as_bytes();
            out.extend_from_slice(&(nb.len() as u32).to_le_bytes());
            out.extend_from_slice(nb);
            out.extend_from_slice(&2u32.to_le_bytes());
            out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
            for &v in m.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(Error::Checkpoint("bad magic; not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (expected {VERSION})"
            )));
        }
        let cfg_len = r.u32()? as usize;
        let config_text = String::from_utf8(r.take(cfg_len)?.to_vec())
            .map_err(|e| Error::Checkpoint(format!("config snapshot not UTF-8: {e}")))?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|e| Error::Checkpoint(format!("tensor name not UTF-8: {e}")))?;
            let rank = r.u32()? as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(r.u32()? as usize);
            }
            let (rows, cols) = match rank {
                1 => (dims[0], 1),
                2 => (dims[0], dims[1]),
                _ => {
                    return Err(Error::Checkpoint(format!(
                        "tensor {name}: unsupported rank {rank}"
                    )))
                }
            };
            let n = rows * cols;
            let raw = r.take(4 * n)?;
            let mut data = Vec::with_capacity(n);
            for chunk in raw.chunks_exact(4) {
                data.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
            }
            tensors.push((name, Matrix::from_vec(rows, cols, data)?));
        }
        Ok(Checkpoint {
            config_text,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| Error::io(parent.display().to_string(), e))?;
            }
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes =
            std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn scalar(v: f64) -> Matrix<f32> {
    Matrix::from_vec(1, 1, vec![v as f32]).expect("1x1")
}

/// Bundle model, optimizer and progress into a checkpoint.
pub fn build_checkpoint(
    config: &RunConfig,
    model: &ModelParams<f32>,
    adam: Option<&AdamState<f32>>,
    state: &TrainState,
) -> Checkpoint {
    let mut tensors: Vec<(String, Matrix<f32>)> = model
        .visit()
        .into_iter()
        .map(|(n, m, _)| (n, m.clone()))
        .collect();
    if let Some(adam) = adam {
        for ((name, _, _), (m, v)) in model.visit().into_iter().zip(adam.moments.iter()) {
            tensors.push((format!("adam.m.{name}"), m.clone()));
            tensors.push((format!("adam.v.{name}"), v.clone()));
        }
    }
    tensors.push(("state.step".into(), scalar(state.step as f64)));
    tensors.push(("state.stage".into(), scalar(state.stage as f64)));
    tensors.push(("state.epoch".into(), scalar(state.epoch as f64)));
    tensors.push(("state.best_val".into(), scalar(state.best_val)));
    Checkpoint {
        config_text: config.to_config_string(),
        tensors,
    }
}

fn want(ckpt: &Checkpoint, name: &str) -> Result<Matrix<f32>> {
    ckpt.get(name)
        .cloned()
        .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))
}

/// Rebuild the model (and, when present, the optimizer and progress) from a
/// checkpoint. The embedded config drives layer count and trainability.
pub fn restore(
    ckpt: &Checkpoint,
) -> Result<(RunConfig, ModelParams<f32>, Option<AdamState<f32>>, TrainState)> {
    let config = RunConfig::from_str(&ckpt.config_text)?;
    let mut lstm = Vec::with_capacity(config.layers);
    for l in 0..config.layers {
        lstm.push(LstmLayerParams {
            w_x: want(ckpt, &format!("lstm.{l}.w_x"))?,
            w_h: want(ckpt, &format!("lstm.{l}.w_h"))?,
            bias: want(ckpt, &format!("lstm.{l}.bias"))?,
        });
    }
    let model = ModelParams {
        embedding: Embedding {
            table: want(ckpt, "embedding")?,
            trainable: config.train_embedding,
        },
        lstm,
        jump: JumpHead {
            w: want(ckpt, "jump.w")?,
            bias: want(ckpt, "jump.bias")?,
        },
        cls: ClassifierHead {
            w: want(ckpt, "cls.w")?,
            bias: want(ckpt, "cls.bias")?,
        },
        qa: BilinearQaHead {
            w: want(ckpt, "qa.w")?,
        },
        baseline: BaselineParams {
            w: want(ckpt, "baseline.w")?,
            c: want(ckpt, "baseline.c")?,
        },
    };
    let adam = if ckpt.get("adam.m.embedding").is_some() {
        let mut st = AdamState::new(&model, config.lr);
        st.moments = model
            .visit()
            .into_iter()
            .map(|(n, _, _)| {
                Ok((
                    want(ckpt, &format!("adam.m.{n}"))?,
                    want(ckpt, &format!("adam.v.{n}"))?,
                ))
            })
            .collect::<Result<_>>()?;
        Some(st)
    } else {
        None
    };
    let read_scalar = |name: &str| -> f64 {
        ckpt.get(name).map(|m| m.get(0, 0) as f64).unwrap_or(0.0)
    };
    let state = TrainState {
        step: read_scalar("state.step") as u64,
        stage: read_scalar("state.stage") as usize,
        epoch: read_scalar("state.epoch") as usize,
        best_val: read_scalar("state.best_val"),
    };
    Ok((config, model, adam, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDims;
    use crate::numeric::Rng;

    fn fixture() -> (RunConfig, ModelParams<f32>, AdamState<f32>, TrainState) {
        let mut config = RunConfig::default();
        config.set("hidden", "6").unwrap();
        config.set("embed", "4").unwrap();
        config.set("vocab", "11").unwrap();
        config.set("classes", "5").unwrap();
        config.set("max_jump", "3").unwrap();
        config.set("layers", "2").unwrap();
        let dims = ModelDims {
            vocab: 11,
            embed: 4,
            hidden: 6,
            layers: 2,
            classes: 5,
            max_jump: 3,
        };
        let model = ModelParams::init(&dims, &mut Rng::new(77));
        let adam = AdamState::new(&model, 0.001);
        let state = TrainState {
            step: 123,
            stage: 2,
            epoch: 4,
            best_val: 0.875,
        };
        (config, model, adam, state)
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let (config, model, adam, state) = fixture();
        let ckpt = build_checkpoint(&config, &model, Some(&adam), &state);
        let bytes = ckpt.to_bytes();
        let loaded = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(loaded.to_bytes(), bytes);
    }

    #[test]
    fn restore_reproduces_model_exactly() {
        let (config, model, adam, state) = fixture();
        let ckpt = build_checkpoint(&config, &model, Some(&adam), &state);
        let bytes = ckpt.to_bytes();
        let loaded = Checkpoint::from_bytes(&bytes).unwrap();
        let (cfg2, model2, adam2, state2) = restore(&loaded).unwrap();
        assert_eq!(cfg2, config);
        assert_eq!(model2, model);
        assert_eq!(state2, state);
        assert!(adam2.is_some());
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = build_checkpoint(
            &fixture().0,
            &fixture().1,
            None,
            &TrainState::default(),
        )
        .to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn unknown_version_rejected() {
        let mut bytes = build_checkpoint(
            &fixture().0,
            &fixture().1,
            None,
            &TrainState::default(),
        )
        .to_bytes();
        bytes[4] = 99;
        let err = Checkpoint::from_bytes(&bytes);
        match err {
            Err(Error::Checkpoint(msg)) => assert!(msg.contains("version")),
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_rejected() {
        let bytes = build_checkpoint(
            &fixture().0,
            &fixture().1,
            None,
            &TrainState::default(),
        )
        .to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }
}
