//! Continuous-discrete actor-critic agent.
//!
//! The actor maps the observed state to one continuous parameter per discrete
//! action (here: engine torque per clutch position, in [−1, 1]). Twin critics
//! map state plus the full parameter vector to one Q-value per discrete
//! action; the executed discrete action is the ε-greedy argmax over critic-1.
//! Updates use the three stabilizers of twin-delayed learning: smoothed target
//! actions, the elementwise minimum of the target critics, and actor/target
//! updates only every `policy_delay`-th gradient step.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use phev_core::env::{EmsEnv, EnvState, HybridAction, Policy, SocInit};

use crate::nn::{AdamState, Head, Mlp};
use crate::replay::{Experience, ReplayBuffer};
use crate::{Result, RlError};

pub const STATE_DIM: usize = 3;
/// Discrete action count: clutch open, clutch closed.
pub const K: usize = 2;
const CRITIC_IN: usize = STATE_DIM + K;

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub gamma: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Updates start once the buffer holds more than this many samples.
    pub warmup: usize,
    pub expl_noise: f64,
    pub target_noise: f64,
    pub noise_clip: f64,
    pub policy_delay: u64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_steps: u64,
    pub hidden: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gamma: 0.99,
            tau: 0.001,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            buffer_capacity: 200_000,
            batch_size: 128,
            warmup: 512,
            expl_noise: 0.02,
            target_noise: 0.05,
            noise_clip: 0.1,
            policy_delay: 2,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_steps: 50_000,
            hidden: 64,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(RlError::Config("gamma must lie in (0, 1]".into()));
        }
        if !(self.batch_size <= self.warmup && self.warmup <= self.buffer_capacity) {
            return Err(RlError::Config(
                "need batch ≤ warmup ≤ buffer capacity".into(),
            ));
        }
        if self.policy_delay < 1 {
            return Err(RlError::Config("policy delay must be ≥ 1".into()));
        }
        if !(self.noise_clip > 0.0) {
            return Err(RlError::Config("noise clip must be positive".into()));
        }
        Ok(())
    }
}

/// Losses of one gradient step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateReport {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    /// Present only on delayed actor steps.
    pub actor_loss: Option<f64>,
}

/// One finished training episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub env_steps_at_end: u64,
    pub return_cny: f64,
    pub soc_init: f64,
}

/// The agent: six networks, three optimizers, replay, and derived rng streams.
pub struct PdqnTd3Agent {
    pub hp: Hyperparams,
    pub max_torque: f64,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub actor_targ: Mlp,
    pub critic1_targ: Mlp,
    pub critic2_targ: Mlp,
    pub adam_actor: AdamState,
    pub adam_critic1: AdamState,
    pub adam_critic2: AdamState,
    pub buffer: ReplayBuffer,
    pub env_steps: u64,
    pub update_count: u64,
    pub episode_count: u64,
    pub rng_expl: ChaCha12Rng,
    pub rng_targ: ChaCha12Rng,
    pub rng_sample: ChaCha12Rng,
    // in-flight episode accumulators so training can run in resumable chunks
    pub(crate) episode_open: bool,
    pub(crate) ep_return: f64,
    pub(crate) ep_soc_init: f64,
}

fn stream(seed: u64, tag: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E3779B97F4A7C15))
}

impl PdqnTd3Agent {
    pub fn new(hp: Hyperparams, seed: u64, max_torque: f64) -> Result<PdqnTd3Agent> {
        hp.validate()?;
        let mut rng_init = stream(seed, 1);
        let h = hp.hidden;
        let actor = Mlp::new(&[STATE_DIM, h, h, K], Head::Tanh, &mut rng_init);
        let critic1 = Mlp::new(&[CRITIC_IN, h, h, K], Head::Linear, &mut rng_init);
        let critic2 = Mlp::new(&[CRITIC_IN, h, h, K], Head::Linear, &mut rng_init);
        let adam_actor = AdamState::new(&actor, hp.lr_actor);
        let adam_critic1 = AdamState::new(&critic1, hp.lr_critic);
        let adam_critic2 = AdamState::new(&critic2, hp.lr_critic);
        Ok(PdqnTd3Agent {
            actor_targ: actor.clone(),
            critic1_targ: critic1.clone(),
            critic2_targ: critic2.clone(),
            actor,
            critic1,
            critic2,
            adam_actor,
            adam_critic1,
            adam_critic2,
            buffer: ReplayBuffer::new(hp.buffer_capacity),
            env_steps: 0,
            update_count: 0,
            episode_count: 0,
            rng_expl: stream(seed, 2),
            rng_targ: stream(seed, 3),
            rng_sample: stream(seed, 4),
            episode_open: false,
            ep_return: 0.0,
            ep_soc_init: 0.0,
            hp,
            max_torque,
        })
    }

    /// Current exploration rate: linear decay from start to end.
    pub fn epsilon(&self) -> f64 {
        let f = (self.env_steps as f64 / self.hp.eps_decay_steps as f64).min(1.0);
        self.hp.eps_start + (self.hp.eps_end - self.hp.eps_start) * f
    }

    /// Critic Q-values for a single (state, parameter vector) pair.
    pub fn q_values(critic: &Mlp, state: &[f64; STATE_DIM], params: &[f64; K]) -> [f64; K] {
        let mut input = [0.0; CRITIC_IN];
        input[..STATE_DIM].copy_from_slice(state);
        input[STATE_DIM..].copy_from_slice(params);
        let out = critic.forward(&input);
        [out[0], out[1]]
    }

    /// Deterministic action: actor parameters, discrete argmax on critic-1.
    pub fn act_greedy(&self, state: &EnvState) -> HybridAction {
        let s = state.normalized();
        let out = self.actor.forward(&s);
        let params = [out[0], out[1]];
        let q = Self::q_values(&self.critic1, &s, &params);
        let k = if q[1] > q[0] { 1 } else { 0 };
        HybridAction::from_normalized(params[k], k as u8, self.max_torque)
    }

    /// Exploring action: Gaussian noise on every continuous channel, ε-greedy
    /// discrete choice. Returns the action plus the noisy parameter vector
    /// and chosen discrete index for the replay record.
    pub fn act_explore(&mut self, state: &EnvState) -> (HybridAction, [f64; K], usize) {
        let s = state.normalized();
        let out = self.actor.forward(&s);
        let mut params = [out[0], out[1]];
        if self.hp.expl_noise > 0.0 {
            let dist = Normal::new(0.0, self.hp.expl_noise).expect("valid noise std");
            for p in params.iter_mut() {
                *p = (*p + dist.sample(&mut self.rng_expl)).clamp(-1.0, 1.0);
            }
        }
        let eps = self.epsilon();
        let u: f64 = self.rng_expl.random();
        let k = if u < eps {
            self.rng_expl.random_range(0..K)
        } else {
            let q = Self::q_values(&self.critic1, &s, &params);
            if q[1] > q[0] {
                1
            } else {
                0
            }
        };
        (
            HybridAction::from_normalized(params[k], k as u8, self.max_torque),
            params,
            k,
        )
    }

    /// Twin-target values for a batch: smoothed target parameters, clipped
    /// double-Q bootstrap. Returns per-sample targets and the smoothed
    /// parameter vectors.
    pub fn targets_for(&mut self, batch: &[Experience]) -> (Vec<f64>, Vec<[f64; K]>) {
        let n = batch.len();
        let mut next_states = Vec::with_capacity(n * STATE_DIM);
        for e in batch {
            next_states.extend_from_slice(&e.next_state);
        }
        let mu = self.actor_targ.forward_batch(&next_states, n);
        let c = self.hp.noise_clip;
        let mut smoothed = Vec::with_capacity(n);
        let dist = if self.hp.target_noise > 0.0 {
            Some(Normal::new(0.0, self.hp.target_noise).expect("valid noise std"))
        } else {
            None
        };
        let mut critic_in = Vec::with_capacity(n * CRITIC_IN);
        for (i, e) in batch.iter().enumerate() {
            let mut x = [mu[i * K], mu[i * K + 1]];
            if let Some(d) = &dist {
                for v in x.iter_mut() {
                    let noise = d.sample(&mut self.rng_targ).clamp(-c, c);
                    *v = (*v + noise).clamp(-1.0, 1.0);
                }
            }
            smoothed.push(x);
            critic_in.extend_from_slice(&e.next_state);
            critic_in.extend_from_slice(&x);
        }
        let q1 = self.critic1_targ.forward_batch(&critic_in, n);
        let q2 = self.critic2_targ.forward_batch(&critic_in, n);
        let mut ys = Vec::with_capacity(n);
        for (i, e) in batch.iter().enumerate() {
            let q_min_max = (0..K)
                .map(|k| q1[i * K + k].min(q2[i * K + k]))
                .fold(f64::NEG_INFINITY, f64::max);
            let y = if e.done {
                e.reward
            } else {
                e.reward + self.hp.gamma * q_min_max
            };
            ys.push(y);
        }
        (ys, smoothed)
    }

    /// One gradient step: critics every call, actor and targets every
    /// `policy_delay`-th. Returns `None` until the buffer exceeds warmup.
    pub fn update(&mut self) -> Result<Option<UpdateReport>> {
        if self.buffer.len() <= self.hp.warmup {
            return Ok(None);
        }
        let n = self.hp.batch_size;
        let idx = self.buffer.sample_indices(n, &mut self.rng_sample);
        let batch: Vec<Experience> = idx.iter().map(|&i| *self.buffer.get(i)).collect();
        let (ys, _) = self.targets_for(&batch);

        let mut critic_in = Vec::with_capacity(n * CRITIC_IN);
        for e in &batch {
            critic_in.extend_from_slice(&e.state);
            critic_in.extend_from_slice(&e.params);
        }

        let mut losses = [0.0; 2];
        for (ci, (critic, adam)) in [
            (&mut self.critic1, &mut self.adam_critic1),
            (&mut self.critic2, &mut self.adam_critic2),
        ]
        .into_iter()
        .enumerate()
        {
            let cache = critic.forward_cached(&critic_in, n);
            let q = cache.acts.last().unwrap();
            let mut upstream = vec![0.0; n * K];
            let mut loss = 0.0;
            for (i, e) in batch.iter().enumerate() {
                let err = q[i * K + e.k] - ys[i];
                loss += err * err;
                // gradient flows only through the executed discrete action
                upstream[i * K + e.k] = err / n as f64;
            }
            losses[ci] = 0.5 * loss / n as f64;
            let (grads, _) = critic.backward(&cache, &upstream);
            adam.step(critic, &grads)?;
        }

        self.update_count += 1;
        let mut actor_loss = None;
        if self.update_count % self.hp.policy_delay == 0 {
            actor_loss = Some(self.update_actor(&batch)?);
            self.actor_targ.soft_update_from(&self.actor, self.hp.tau);
            self.critic1_targ
                .soft_update_from(&self.critic1, self.hp.tau);
            self.critic2_targ
                .soft_update_from(&self.critic2, self.hp.tau);
        }
        Ok(Some(UpdateReport {
            critic1_loss: losses[0],
            critic2_loss: losses[1],
            actor_loss,
        }))
    }

    /// Ascend the summed critic-1 value over all discrete actions.
    fn update_actor(&mut self, batch: &[Experience]) -> Result<f64> {
        let n = batch.len();
        let mut states = Vec::with_capacity(n * STATE_DIM);
        for e in batch {
            states.extend_from_slice(&e.state);
        }
        let actor_cache = self.actor.forward_cached(&states, n);
        let x = actor_cache.acts.last().unwrap();
        let mut critic_in = Vec::with_capacity(n * CRITIC_IN);
        for i in 0..n {
            critic_in.extend_from_slice(&states[i * STATE_DIM..(i + 1) * STATE_DIM]);
            critic_in.extend_from_slice(&x[i * K..(i + 1) * K]);
        }
        let critic_cache = self.critic1.forward_cached(&critic_in, n);
        let q = critic_cache.acts.last().unwrap();
        let loss = -q.iter().sum::<f64>() / n as f64;

        // ∂loss/∂q = −1/n; propagate through critic-1 to its inputs only
        let upstream = vec![-1.0 / n as f64; n * K];
        let (_, dinput) = self.critic1.backward(&critic_cache, &upstream);
        let mut dx = vec![0.0; n * K];
        for i in 0..n {
            dx[i * K..(i + 1) * K]
                .copy_from_slice(&dinput[i * CRITIC_IN + STATE_DIM..(i + 1) * CRITIC_IN]);
        }
        let (agrads, _) = self.actor.backward(&actor_cache, &dx);
        self.adam_actor.step(&mut self.actor, &agrads)?;
        Ok(loss)
    }

    /// Push one interaction into replay (exposed for synthetic-data tests).
    pub fn push_experience(&mut self, e: Experience) {
        self.buffer.push(e);
    }

    /// Run `steps` environment steps of the Algorithm-style loop: act with
    /// exploration, store, update every step. Episodes reset with randomized
    /// initial state of charge; finished episodes append to `log`. Safe to
    /// call repeatedly — counters and the in-flight episode carry over.
    pub fn train_steps(
        &mut self,
        env: &mut EmsEnv,
        steps: u64,
        log: &mut Vec<EpisodeRecord>,
    ) -> Result<()> {
        for _ in 0..steps {
            if !self.episode_open || env.done() {
                let st = env
                    .reset(SocInit::Randomized)
                    .map_err(|e| RlError::Env(e.to_string()))?;
                self.ep_soc_init = st.soc;
                self.ep_return = 0.0;
                self.episode_open = true;
            }
            let state = env.state();
            let (action, params, k) = self.act_explore(&state);
            let out = env.step(action).map_err(|e| RlError::Env(e.to_string()))?;
            self.buffer.push(Experience {
                state: state.normalized(),
                params,
                k,
                reward: out.transition.reward,
                next_state: out.transition.next_state.normalized(),
                done: out.transition.done,
            });
            self.env_steps += 1;
            self.ep_return += out.transition.reward;
            self.update()?;
            if out.transition.done {
                self.episode_count += 1;
                log.push(EpisodeRecord {
                    episode: self.episode_count,
                    env_steps_at_end: self.env_steps,
                    return_cny: self.ep_return,
                    soc_init: self.ep_soc_init,
                });
                self.episode_open = false;
            }
        }
        Ok(())
    }
}

/// Frozen greedy policy view for evaluation rollouts.
pub struct GreedyPolicy<'a>(pub &'a PdqnTd3Agent);

impl Policy for GreedyPolicy<'_> {
    fn decide(&mut self, _t: usize, state: &EnvState) -> HybridAction {
        self.0.act_greedy(state)
    }
}

/// Learning-curve CSV (`episode,steps,return_cny,soc_init`).
pub fn learning_curve_csv(records: &[EpisodeRecord]) -> String {
    let mut out = String::from("episode,steps,return_cny,soc_init\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.episode, r.env_steps_at_end, r.return_cny, r.soc_init
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_hp() -> Hyperparams {
        Hyperparams {
            buffer_capacity: 1000,
            batch_size: 8,
            warmup: 16,
            eps_decay_steps: 100,
            ..Default::default()
        }
    }

    fn state(v: f64, td: f64, soc: f64) -> EnvState {
        EnvState {
            v,
            demand_torque: td,
            soc,
            t: 0,
        }
    }

    #[test]
    fn greedy_is_deterministic_and_consumes_no_rng() {
        let agent = PdqnTd3Agent::new(tiny_hp(), 3, 120.0).unwrap();
        let s = state(10.0, 400.0, 0.6);
        assert_eq!(agent.act_greedy(&s), agent.act_greedy(&s));
    }

    #[test]
    fn epsilon_one_gives_uniform_discrete_choice() {
        let mut hp = tiny_hp();
        hp.eps_start = 1.0;
        hp.eps_end = 1.0;
        let mut agent = PdqnTd3Agent::new(hp, 11, 120.0).unwrap();
        let s = state(5.0, 100.0, 0.5);
        let mut ones = 0;
        let n = 1000;
        for _ in 0..n {
            let (_, _, k) = agent.act_explore(&s);
            ones += k;
        }
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.05, "frequency {freq}");
    }

    #[test]
    fn greedy_argmax_follows_critic_preference() {
        let mut agent = PdqnTd3Agent::new(tiny_hp(), 5, 120.0).unwrap();
        // force critic-1 to prefer k = 0 everywhere: zero net, bias [1, 0]
        for l in &mut agent.critic1.layers {
            l.w.iter_mut().for_each(|w| *w = 0.0);
            l.b.iter_mut().for_each(|b| *b = 0.0);
        }
        agent.critic1.layers.last_mut().unwrap().b[0] = 1.0;
        for (v, td, soc) in [(0.0, 50.0, 0.4), (20.0, 800.0, 0.7), (33.0, -200.0, 0.31)] {
            let a = agent.act_greedy(&state(v, td, soc));
            assert_eq!(a.clutch, 0);
        }
    }

    #[test]
    fn argmax_invariant_to_constant_critic_shift() {
        let mut agent = PdqnTd3Agent::new(tiny_hp(), 6, 120.0).unwrap();
        let s = state(12.0, 300.0, 0.55);
        let before = agent.act_greedy(&s);
        // add the same constant to both outputs
        for b in agent.critic1.layers.last_mut().unwrap().b.iter_mut() {
            *b += 123.456;
        }
        let after = agent.act_greedy(&s);
        assert_eq!(before.clutch, after.clutch);
        assert_eq!(before.engine_torque, after.engine_torque);
    }

    #[test]
    fn identical_target_critics_make_min_trivial_and_smoothing_bounded() {
        let mut agent = PdqnTd3Agent::new(tiny_hp(), 7, 120.0).unwrap();
        agent.critic2_targ = agent.critic1_targ.clone();
        let batch: Vec<Experience> = (0..16)
            .map(|i| Experience {
                state: [0.1 * i as f64, 0.0, 0.5],
                params: [0.0, 0.0],
                k: i % 2,
                reward: -0.01 * i as f64,
                next_state: [0.1 * i as f64, 0.05, 0.5],
                done: i == 15,
            })
            .collect();
        let (ys, smoothed) = agent.targets_for(&batch);
        // recompute with critic-1 alone: identical twins → same targets
        let mut agent2 = PdqnTd3Agent::new(tiny_hp(), 7, 120.0).unwrap();
        agent2.critic2_targ = agent2.critic1_targ.clone();
        let (ys2, smoothed2) = agent2.targets_for(&batch);
        assert_eq!(ys, ys2);
        assert_eq!(smoothed, smoothed2);
        // smoothing bound |x̃ − μ(s')| ≤ clip
        let mut ns = Vec::new();
        for e in &batch {
            ns.extend_from_slice(&e.next_state);
        }
        let mu = agent.actor_targ.forward_batch(&ns, batch.len());
        for (i, x) in smoothed.iter().enumerate() {
            for k in 0..K {
                assert!((x[k] - mu[i * K + k]).abs() <= agent.hp.noise_clip + 1e-12);
            }
        }
        // terminal sample bootstraps nothing
        assert_eq!(ys[15], batch[15].reward);
    }

    #[test]
    fn zero_target_noise_reproduces_target_policy() {
        let mut hp = tiny_hp();
        hp.target_noise = 0.0;
        let mut agent = PdqnTd3Agent::new(hp, 8, 120.0).unwrap();
        let batch = vec![Experience {
            state: [0.2, 0.1, 0.6],
            params: [0.3, -0.3],
            k: 0,
            reward: -0.5,
            next_state: [0.25, 0.12, 0.59],
            done: false,
        }];
        let (_, smoothed) = agent.targets_for(&batch);
        let mu = agent.actor_targ.forward(&batch[0].next_state);
        assert_eq!(smoothed[0][0], mu[0]);
        assert_eq!(smoothed[0][1], mu[1]);
    }

    #[test]
    fn one_sample_target_matches_hand_evaluation() {
        // zeroed networks with chosen output biases make the smoothed target
        // parameters and the bootstrapped value exactly hand-computable
        let mut hp = tiny_hp();
        hp.target_noise = 0.0;
        hp.gamma = 0.9;
        let mut agent = PdqnTd3Agent::new(hp, 30, 120.0).unwrap();
        for net in [&mut agent.actor_targ, &mut agent.critic1_targ, &mut agent.critic2_targ] {
            for l in net.layers.iter_mut() {
                l.w.iter_mut().for_each(|w| *w = 0.0);
                l.b.iter_mut().for_each(|b| *b = 0.0);
            }
        }
        agent.actor_targ.layers.last_mut().unwrap().b = vec![0.25, -0.5];
        agent.critic1_targ.layers.last_mut().unwrap().b = vec![1.0, 4.0];
        agent.critic2_targ.layers.last_mut().unwrap().b = vec![2.0, 3.0];
        let e = Experience {
            state: [0.1, 0.2, 0.5],
            params: [0.0, 0.0],
            k: 0,
            reward: -0.7,
            next_state: [0.3, 0.1, 0.45],
            done: false,
        };
        let (ys, smoothed) = agent.targets_for(&[e]);
        // x̃ = tanh(bias) exactly (no noise, zero weights)
        assert!((smoothed[0][0] - 0.25_f64.tanh()).abs() < 1e-15);
        assert!((smoothed[0][1] - (-0.5_f64).tanh()).abs() < 1e-15);
        // min over twins: [min(1,2), min(4,3)] = [1, 3]; max over k = 3
        let expect = -0.7 + 0.9 * 3.0;
        assert!((ys[0] - expect).abs() < 1e-12, "{} vs {expect}", ys[0]);
    }

    #[test]
    fn single_transition_update_matches_hand_gradient() {
        // batch of one, zeroed critics: q = bias_k, loss = ½(bias_k − y)²,
        // ∂loss/∂bias_k = bias_k − y; the first Adam step moves bias_k by
        // −lr·sign(gradient) (bias-corrected moments cancel at step one)
        let hp = Hyperparams {
            buffer_capacity: 8,
            batch_size: 1,
            warmup: 1,
            gamma: 1e-12,
            target_noise: 0.0,
            expl_noise: 0.02,
            ..Default::default()
        };
        let lr = hp.lr_critic;
        let mut agent = PdqnTd3Agent::new(hp, 31, 120.0).unwrap();
        for critic in [&mut agent.critic1, &mut agent.critic2] {
            for l in critic.layers.iter_mut() {
                l.w.iter_mut().for_each(|w| *w = 0.0);
                l.b.iter_mut().for_each(|b| *b = 0.0);
            }
            critic.layers.last_mut().unwrap().b = vec![0.4, 0.0];
        }
        let e = Experience {
            state: [0.0, 0.0, 0.5],
            params: [0.1, -0.1],
            k: 0,
            reward: -0.2,
            next_state: [0.0, 0.0, 0.5],
            done: true,
        };
        agent.push_experience(e);
        agent.push_experience(e);
        let rep = agent.update().unwrap().unwrap();
        // q = 0.4, y = r = −0.2 → loss = ½·0.36 = 0.18, gradient +0.6
        assert!((rep.critic1_loss - 0.18).abs() < 1e-12);
        let b0 = agent.critic1.layers.last().unwrap().b[0];
        assert!((b0 - (0.4 - lr)).abs() < 1e-6, "bias {b0}");
        // the untaken action's head is untouched
        assert_eq!(agent.critic1.layers.last().unwrap().b[1], 0.0);
    }

    #[test]
    fn update_is_noop_until_buffer_exceeds_warmup() {
        let mut agent = PdqnTd3Agent::new(tiny_hp(), 9, 120.0).unwrap();
        for i in 0..agent.hp.warmup {
            agent.push_experience(Experience {
                state: [0.0, 0.0, 0.5],
                params: [0.0, 0.0],
                k: i % 2,
                reward: -0.1,
                next_state: [0.0, 0.0, 0.5],
                done: false,
            });
        }
        assert!(agent.update().unwrap().is_none());
        agent.push_experience(Experience {
            state: [0.0, 0.0, 0.5],
            params: [0.0, 0.0],
            k: 0,
            reward: -0.1,
            next_state: [0.0, 0.0, 0.5],
            done: false,
        });
        assert!(agent.update().unwrap().is_some());
    }

    #[test]
    fn actor_untouched_between_delayed_updates() {
        let mut agent = PdqnTd3Agent::new(tiny_hp(), 10, 120.0).unwrap();
        for i in 0..40 {
            agent.push_experience(Experience {
                state: [0.01 * i as f64, 0.0, 0.5],
                params: [0.1, -0.1],
                k: i % 2,
                reward: -0.05,
                next_state: [0.01 * i as f64, 0.0, 0.5],
                done: false,
            });
        }
        // delay = 2: odd update counts leave actor and targets bit-identical
        let actor_before = agent.actor.clone();
        let targ_before = agent.actor_targ.clone();
        let r1 = agent.update().unwrap().unwrap();
        assert!(r1.actor_loss.is_none());
        assert_eq!(agent.actor, actor_before);
        assert_eq!(agent.actor_targ, targ_before);
        let r2 = agent.update().unwrap().unwrap();
        assert!(r2.actor_loss.is_some());
        assert_ne!(agent.actor, actor_before);
    }

    #[test]
    fn perfect_critics_have_zero_loss() {
        // γ = 0 and constant reward: targets equal the reward; zero both
        // critics and set their output bias to that reward
        let mut hp = tiny_hp();
        hp.gamma = 1e-12; // strictly positive per validation, effectively zero
        hp.target_noise = 0.0;
        let mut agent = PdqnTd3Agent::new(hp, 12, 120.0).unwrap();
        let r = -0.25;
        for critic in [&mut agent.critic1, &mut agent.critic2] {
            for l in critic.layers.iter_mut() {
                l.w.iter_mut().for_each(|w| *w = 0.0);
                l.b.iter_mut().for_each(|b| *b = 0.0);
            }
            critic.layers.last_mut().unwrap().b = vec![r, r];
        }
        for i in 0..20 {
            agent.push_experience(Experience {
                state: [0.1, 0.2, 0.5],
                params: [0.0, 0.0],
                k: i % 2,
                reward: r,
                next_state: [0.1, 0.2, 0.5],
                done: true,
            });
        }
        let rep = agent.update().unwrap().unwrap();
        assert!(rep.critic1_loss.abs() < 1e-20, "{}", rep.critic1_loss);
        assert!(rep.critic2_loss.abs() < 1e-20, "{}", rep.critic2_loss);
    }

    #[test]
    fn clipped_min_never_exceeds_single_critic_targets() {
        let agent = PdqnTd3Agent::new(tiny_hp(), 13, 120.0).unwrap();
        let batch: Vec<Experience> = (0..32)
            .map(|i| Experience {
                state: [0.03 * i as f64, -0.01 * i as f64, 0.4],
                params: [0.2, -0.2],
                k: i % 2,
                reward: -0.02,
                next_state: [0.03 * i as f64, 0.0, 0.4],
                done: false,
            })
            .collect();
        // y with the twin minimum
        let mut a1 = clone_agent(&agent);
        let (y_min, xs) = a1.targets_for(&batch);
        // recompute each single-critic bootstrap at the same smoothed params
        for (i, e) in batch.iter().enumerate() {
            for critic in [&agent.critic1_targ, &agent.critic2_targ] {
                let q = PdqnTd3Agent::q_values(critic, &e.next_state, &xs[i]);
                let y_single = e.reward + agent.hp.gamma * q.into_iter().fold(f64::NEG_INFINITY, f64::max);
                assert!(
                    y_min[i] <= y_single + 1e-12,
                    "sample {i}: {} > {}",
                    y_min[i],
                    y_single
                );
            }
        }
    }

    fn clone_agent(a: &PdqnTd3Agent) -> PdqnTd3Agent {
        let mut b = PdqnTd3Agent::new(a.hp.clone(), 13, a.max_torque).unwrap();
        b.actor = a.actor.clone();
        b.critic1 = a.critic1.clone();
        b.critic2 = a.critic2.clone();
        b.actor_targ = a.actor_targ.clone();
        b.critic1_targ = a.critic1_targ.clone();
        b.critic2_targ = a.critic2_targ.clone();
        b
    }
}
