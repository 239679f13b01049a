//! Sentence-level QA path end to end on a synthesized candidate-matching
//! corpus: the answer is whichever candidate word occurs in the context.

use lstm_jump::commands::cmd_train;
use lstm_jump::config::RunConfig;
use lstm_jump::numeric::Rng;
use std::fmt::Write as _;

fn toy_qa_corpus(n: usize, seed: u64) -> String {
    let markers: Vec<String> = (0..10).map(|i| format!("marker{i}")).collect();
    let fillers = ["the", "cat", "sat", "near", "a", "tree", "and", "watched"];
    let mut rng = Rng::new(seed);
    let mut out = String::new();
    for _ in 0..n {
        let mut order: Vec<usize> = (0..10).collect();
        rng.shuffle(&mut order);
        let answer_slot = rng.below(10) as usize;
        let answer = &markers[order[answer_slot]];
        let answer_sentence = rng.below(5) as usize;
        let candidates: Vec<String> = order.iter().map(|&i| markers[i].clone()).collect();
        let mut sentences = Vec::new();
        for s in 0..5 {
            let mut words: Vec<String> = (0..4)
                .map(|_| fillers[rng.below(fillers.len() as u64) as usize].to_string())
                .collect();
            if s == answer_sentence {
                words[1] = answer.clone();
                words[3] = answer.clone();
            }
            sentences.push(words.join(" "));
        }
        let _ = writeln!(
            out,
            "{}\t{}\twhich marker appears\t{}",
            answer_slot,
            candidates.join(" "),
            sentences.join("\t")
        );
    }
    out
}

#[test]
fn qa_candidate_matching_trains_above_chance() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("qa_train.tsv");
    std::fs::write(&train, toy_qa_corpus(400, 9)).unwrap();

    let mut cfg = RunConfig::default();
    cfg.set("task", "qa").unwrap();
    cfg.set("level", "sentence").unwrap();
    cfg.hidden = 48;
    cfg.embed = 24;
    cfg.layers = 1;
    cfg.batch = 20;
    cfg.read_len = 1;
    cfg.max_jump = 3;
    cfg.n_jumps = 4;
    cfg.span_len = 4;
    cfg.query_len = 3;
    cfg.candidates = 10;
    cfg.target_len = 5;
    cfg.max_epochs = 40;
    cfg.eval_every = 0;
    cfg.stop_val_acc = 0.85;
    cfg.seed = 4;
    cfg.train_path = train.display().to_string();
    cfg.checkpoint = String::new();

    let mut sink = Vec::new();
    let outcome = cmd_train(&cfg, false, &mut sink).expect("qa training");
    // 10 candidates -> chance accuracy 0.10
    assert!(
        outcome.best_val > 0.5,
        "QA accuracy {} should clear chance by a wide margin",
        outcome.best_val
    );
}
