//! Word-level text classification with padding and windowed augmentation on
//! the toy review corpus, then an (R, N) sweep at evaluation time: the same
//! checkpointed policy reads fewer or more tokens as the budget changes.
//!
//!     cargo run --release --example text_classifier

use lstm_jump::commands::{cmd_eval, cmd_train};
use lstm_jump::config::RunConfig;

fn main() -> lstm_jump::Result<()> {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/toy_reviews.tsv");
    let dir = std::env::temp_dir().join("lstm-jump-text-classifier");
    std::fs::create_dir_all(&dir).expect("temp dir");

    let mut cfg = RunConfig::default();
    cfg.set("task", "classify")?;
    cfg.seed = 5;
    cfg.hidden = 64;
    cfg.embed = 32;
    cfg.layers = 1;
    cfg.batch = 20;
    // read 8 words, jump up to 10, at most 3 jumps
    cfg.read_len = 8;
    cfg.max_jump = 10;
    cfg.n_jumps = 3;
    cfg.target_len = 60;
    cfg.window_len = 50;
    cfg.embed_dropout = 0.1;
    cfg.max_epochs = 40;
    cfg.eval_every = 0;
    cfg.stop_val_acc = 0.96;
    cfg.train_path = corpus.to_string();
    cfg.test_path = corpus.to_string();
    cfg.checkpoint = dir.join("toy.ckpt").display().to_string();

    println!("training on {} ...", corpus);
    let mut sink = std::io::sink();
    let outcome = cmd_train(&cfg, false, &mut sink)?;
    println!(
        "train-set accuracy {:.3} after {} steps ({:.0}s)\n",
        outcome.best_val, outcome.steps, outcome.wall_time
    );

    println!("same checkpoint under different (R, N) budgets:");
    println!("{:>8} {:>10} {:>14}", "(R, N)", "accuracy", "tokens read");
    for (r, n) in [(9usize, 2usize), (8, 3), (7, 4)] {
        let mut eval_cfg = cfg.clone();
        eval_cfg.set("read_len", &r.to_string())?;
        eval_cfg.set("n_jumps", &n.to_string())?;
        let mut out = std::io::sink();
        let report = cmd_eval(&eval_cfg, None, None, None, &mut out)?;
        println!(
            "{:>8} {:>10.3} {:>14.2}",
            format!("({r}, {n})"),
            report.accuracy,
            report.avg_tokens_read
        );
    }
    Ok(())
}
