use lstm_jump::commands::cmd_train;
use lstm_jump::config::RunConfig;
use lstm_jump::data::{gen_synthetic, SyntheticSpec};
use lstm_jump::jump::RolloutMode;
use lstm_jump::numeric::Rng;
use lstm_jump::train::{evaluate, EvalSettings, ReaderSpec};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(11);
    let entropy: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.0);
    let k: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(100);
    let mut cfg = RunConfig::default();
    cfg.seed = seed;
    cfg.hidden = 128;
    cfg.embed = 32;
    cfg.batch = 100;
    cfg.n_train = 100_000;
    cfg.n_valid = 10_000;
    cfg.curriculum = vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 100];
    cfg.read_len = 1;
    cfg.max_jump = k;
    cfg.n_jumps = 5;
    cfg.entropy_weight = entropy;
    cfg.stop_val_acc = 0.98;
    cfg.max_epochs = 100;
    cfg.eval_every = 500;
    cfg.checkpoint = String::new();
    let t0 = std::time::Instant::now();
    let mut out = std::io::stdout().lock();
    let outcome = cmd_train(&cfg, false, &mut out).unwrap();
    println!(
        "TRAIN DONE seed={seed} entropy={entropy} k={k} best_val={:.4} steps={} wall={:.0}s",
        outcome.best_val,
        outcome.steps,
        t0.elapsed().as_secs_f64()
    );
    let es = EvalSettings {
        jump: cfg.jump_config(),
        jump_enabled: true,
        mode: RolloutMode::Sample,
        reader: ReaderSpec::default(),
        threads: 1,
    };
    let test = gen_synthetic(&SyntheticSpec::new(100), 10_000, &mut Rng::new(0xACCE).substream2(97, 1)).unwrap();
    let r = evaluate(&outcome.model, &test, &es, &Rng::new(512)).unwrap();
    println!("TEST T=100 acc={:.4} tokens={:.2}", r.accuracy, r.avg_tokens_read);
    let test1000 = gen_synthetic(&SyntheticSpec::new(1000), 10_000, &mut Rng::new(0xACCE).substream2(97, 2)).unwrap();
    let r2 = evaluate(&outcome.model, &test1000, &es, &Rng::new(513)).unwrap();
    println!(
        "TEST T=1000 acc={:.4} tokens={:.2} total_wall={:.0}s",
        r2.accuracy,
        r2.avg_tokens_read,
        t0.elapsed().as_secs_f64()
    );
}
