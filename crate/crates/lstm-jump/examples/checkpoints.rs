//! Checkpoint format: save, byte-exact reload, and resuming training with a
//! monotone step counter.
//!
//!     cargo run --release --example checkpoints

use lstm_jump::checkpoint::{build_checkpoint, restore, Checkpoint, TrainState};
use lstm_jump::commands::{cmd_gen, cmd_train};
use lstm_jump::config::RunConfig;
use lstm_jump::model::ModelParams;
use lstm_jump::numeric::Rng;

fn main() -> lstm_jump::Result<()> {
    let dir = std::env::temp_dir().join("lstm-jump-checkpoints");
    std::fs::create_dir_all(&dir).expect("temp dir");

    let mut cfg = RunConfig::default();
    cfg.seed = 3;
    cfg.hidden = 24;
    cfg.embed = 8;
    cfg.max_jump = 20;
    cfg.curriculum = vec![10];
    cfg.target_len = 12;
    cfg.n_train = 500;
    cfg.n_valid = 200;
    cfg.n_test = 100;
    cfg.max_epochs = 2;
    cfg.eval_every = 0;
    cfg.stop_val_acc = 1.1;
    cfg.train_path = dir.join("train.txt").display().to_string();
    cfg.valid_path = dir.join("valid.txt").display().to_string();
    cfg.test_path = dir.join("test.txt").display().to_string();
    cfg.checkpoint = dir.join("model.ckpt").display().to_string();

    let mut sink = std::io::sink();
    cmd_gen(&cfg, &mut sink)?;

    // a raw checkpoint round-trip
    let dims = cfg.model_dims(cfg.vocab, cfg.classes);
    let model = ModelParams::<f32>::init(&dims, &mut Rng::new(1));
    let ckpt = build_checkpoint(&cfg, &model, None, &TrainState::default());
    let bytes = ckpt.to_bytes();
    let reloaded = Checkpoint::from_bytes(&bytes)?;
    println!(
        "checkpoint holds {} tensors, {} bytes; save->load->save identical: {}",
        reloaded.tensors.len(),
        bytes.len(),
        reloaded.to_bytes() == bytes
    );
    let (_, restored, _, _) = restore(&reloaded)?;
    println!("restored model equals original: {}", restored == model);

    // train, then resume: the step counter keeps counting
    let outcome = cmd_train(&cfg, false, &mut sink)?;
    println!("first run stopped at step {}", outcome.steps);
    let mut longer = cfg.clone();
    longer.max_epochs = 4;
    let resumed = cmd_train(&longer, true, &mut sink)?;
    println!("resumed run continued to step {}", resumed.steps);
    Ok(())
}
