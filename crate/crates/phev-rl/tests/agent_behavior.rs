//! Cross-module behavior: gradient checks on the production architectures,
//! value regression on a toy problem, and end-to-end training determinism.

use phev_core::cycle::synth_cycle;
use phev_core::env::{EmsEnv, RewardParams};
use phev_core::powertrain::Models;
use phev_rl::agent::{Hyperparams, PdqnTd3Agent};
use phev_rl::nn::{Head, Mlp};
use phev_rl::replay::Experience;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Central finite differences against reverse-mode gradients on the exact
/// architectures the agent trains.
#[test]
fn production_architectures_pass_gradient_check() {
    for (sizes, head, seed) in [
        (vec![3usize, 64, 64, 2], Head::Tanh, 100_u64),   // actor
        (vec![5, 64, 64, 2], Head::Linear, 200),          // twin critic
    ] {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut net = Mlp::new(&sizes, head, &mut rng);
        let batch = 8;
        let x: Vec<f64> = (0..batch * sizes[0])
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let coeffs: Vec<f64> = (0..batch * 2).map(|_| rng.random_range(-1.0..1.0)).collect();

        let cache = net.forward_cached(&x, batch);
        let (grads, _) = net.backward(&cache, &coeffs);
        let loss = |net: &Mlp| -> f64 {
            net.forward_batch(&x, batch)
                .iter()
                .zip(&coeffs)
                .map(|(y, c)| y * c)
                .sum()
        };

        let h = 1e-5;
        let mut worst = 0.0_f64;
        for probe in 0..10 {
            let li = probe % net.layers.len();
            let wi = (probe * 37) % net.layers[li].w.len();
            let orig = net.layers[li].w[wi];
            net.layers[li].w[wi] = orig + h;
            let up = loss(&net);
            net.layers[li].w[wi] = orig - h;
            let dn = loss(&net);
            net.layers[li].w[wi] = orig;
            let numeric = (up - dn) / (2.0 * h);
            let analytic = grads.w[li][wi];
            let denom = numeric.abs().max(analytic.abs()).max(1e-8);
            worst = worst.max((numeric - analytic).abs() / denom);
        }
        assert!(worst <= 1e-4, "gradient mismatch {worst} on {sizes:?}");
    }
}

/// With a vanishing discount and deterministic rewards the critic regresses
/// onto the immediate reward.
#[test]
fn critic_learns_immediate_reward_on_two_state_toy() {
    let hp = Hyperparams {
        gamma: 1e-12,
        target_noise: 0.0,
        buffer_capacity: 64,
        batch_size: 16,
        warmup: 16,
        hidden: 32,
        lr_critic: 3e-3,
        ..Default::default()
    };
    let mut agent = PdqnTd3Agent::new(hp, 21, 120.0).unwrap();
    let s0 = [0.0, 0.0, 0.4];
    let s1 = [1.0, 0.0, 0.6];
    let reward = |s: &[f64; 3], k: usize| -> f64 {
        (if k == 0 { 0.3 } else { -0.2 }) + 0.1 * s[0]
    };
    let mut fill = ChaCha12Rng::seed_from_u64(5);
    for _ in 0..32 {
        let s = if fill.random::<bool>() { s0 } else { s1 };
        let k = usize::from(fill.random::<bool>());
        let p = fill.random_range(-1.0..1.0);
        agent.push_experience(Experience {
            state: s,
            params: [p, -p],
            k,
            reward: reward(&s, k),
            next_state: if s == s0 { s1 } else { s0 },
            done: false,
        });
    }
    for _ in 0..5000 {
        agent.update().unwrap();
    }
    let mut worst = 0.0_f64;
    for e in agent.buffer.iter() {
        let q = PdqnTd3Agent::q_values(&agent.critic1, &e.state, &e.params);
        worst = worst.max((q[e.k] - e.reward).abs());
    }
    assert!(worst <= 1e-2, "worst Q error {worst}");
}

fn training_run(agent_seed: u64, env_seed: u64, steps: u64) -> (Vec<f64>, Mlp) {
    let hp = Hyperparams {
        buffer_capacity: 4096,
        warmup: 256,
        batch_size: 64,
        hidden: 32,
        ..Default::default()
    };
    let mut agent = PdqnTd3Agent::new(hp, agent_seed, 120.0).unwrap();
    let mut env = EmsEnv::new(
        synth_cycle(0),
        Models::default_models(),
        RewardParams::default(),
        env_seed,
    );
    let mut log = Vec::new();
    agent.train_steps(&mut env, steps, &mut log).unwrap();
    (log.iter().map(|r| r.return_cny).collect(), agent.actor)
}

#[test]
fn same_seed_training_is_bit_identical() {
    let (curve_a, actor_a) = training_run(42, 7, 700);
    let (curve_b, actor_b) = training_run(42, 7, 700);
    assert_eq!(curve_a, curve_b);
    assert_eq!(actor_a, actor_b);
    assert!(!curve_a.is_empty());
}

#[test]
fn zero_update_boundary_still_logs_episodes() {
    // exactly warmup steps: no gradient step happens, curve still records
    let hp = Hyperparams {
        buffer_capacity: 4096,
        warmup: 598, // exactly two episodes on the 300-sample cycle
        batch_size: 64,
        hidden: 16,
        ..Default::default()
    };
    let mut agent = PdqnTd3Agent::new(hp, 1, 120.0).unwrap();
    let mut env = EmsEnv::new(
        synth_cycle(0),
        Models::default_models(),
        RewardParams::default(),
        3,
    );
    let mut log = Vec::new();
    agent.train_steps(&mut env, 598, &mut log).unwrap();
    assert_eq!(agent.update_count, 0);
    assert_eq!(log.len(), 2);
}

#[test]
fn checkpoint_resume_continues_counters() {
    let hp = Hyperparams {
        buffer_capacity: 4096,
        warmup: 256,
        batch_size: 64,
        hidden: 16,
        ..Default::default()
    };
    let mut agent = PdqnTd3Agent::new(hp, 9, 120.0).unwrap();
    let mut env = EmsEnv::new(
        synth_cycle(0),
        Models::default_models(),
        RewardParams::default(),
        5,
    );
    let mut log = Vec::new();
    agent.train_steps(&mut env, 400, &mut log).unwrap();
    let dir = std::env::temp_dir().join("phev_rl_resume");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("resume.ckpt");
    phev_rl::checkpoint::save(&agent, &path).unwrap();

    let mut resumed = phev_rl::checkpoint::load(&path).unwrap();
    assert_eq!(resumed.env_steps, 400);
    resumed.train_steps(&mut env, 100, &mut log).unwrap();
    assert_eq!(resumed.env_steps, 500);
}

/// Manual throughput probe: `cargo test -p phev-rl --release -- --ignored bench`
#[test]
#[ignore]
fn bench_training_step_rate() {
    let mut agent = PdqnTd3Agent::new(Hyperparams::default(), 0, 120.0).unwrap();
    let mut env = EmsEnv::new(
        synth_cycle(0),
        Models::default_models(),
        RewardParams::default(),
        0,
    );
    let mut log = Vec::new();
    agent.train_steps(&mut env, 600, &mut log).unwrap(); // fill warmup
    let t0 = std::time::Instant::now();
    let n = 3000;
    agent.train_steps(&mut env, n, &mut log).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    eprintln!(
        "{} steps in {:.2}s → {:.0} steps/s → 170k in {:.1} min",
        n,
        dt,
        n as f64 / dt,
        170_000.0 / (n as f64 / dt) / 60.0
    );
}
