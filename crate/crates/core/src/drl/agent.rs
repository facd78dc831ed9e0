use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::netmodel::{OptimizerKind, SimConfig};
use crate::rng;
use crate::{Error, Result};

use super::mlp::{Activation, Mlp};
use super::optim::Optimizer;
use super::replay::Batch;

/// Sizes that determine every tensor of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentShape {
    pub state_dim: usize,
    pub action_dim: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
    pub ensemble: usize,
}

impl AgentShape {
    pub fn actor_sizes(&self) -> Vec<usize> {
        let mut v = vec![self.state_dim];
        v.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        v.push(self.action_dim);
        v
    }

    pub fn critic_sizes(&self) -> Vec<usize> {
        let mut v = vec![self.state_dim + self.action_dim];
        v.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        v.push(1);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub discount: f64,
    pub soft_update: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub optimizer: OptimizerKind,
}

impl Hyper {
    pub fn from_config(cfg: &SimConfig) -> Self {
        let l = &cfg.learning;
        Hyper {
            discount: l.discount,
            soft_update: l.soft_update,
            actor_lr: l.actor_lr,
            critic_lr: l.critic_lr,
            optimizer: l.optimizer,
        }
    }
}

/// Statistics of one training step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    pub critic_loss: f64,
    /// Mean critic value of each actor's actions on its subsample; `None` when the
    /// actor's mask selected nothing.
    pub actor_q: Vec<Option<f64>>,
}

/// Deterministic actor ensemble sharing one critic, with target copies of both.
#[derive(Debug, Clone)]
pub struct EnsembleAgent {
    pub shape: AgentShape,
    pub hyper: Hyper,
    pub actors: Vec<Mlp>,
    pub actor_targets: Vec<Mlp>,
    pub critic: Mlp,
    pub critic_target: Mlp,
    actor_opts: Vec<Optimizer>,
    critic_opt: Optimizer,
}

const FINAL_INIT: f64 = 3e-3;

impl EnsembleAgent {
    pub fn new(shape: AgentShape, hyper: Hyper, seed: u64) -> Self {
        let actors: Vec<Mlp> = (0..shape.ensemble)
            .map(|j| {
                let mut r = rng::substream(seed, rng::tag::AGENT_INIT, j as u64 + 1);
                Mlp::new(&shape.actor_sizes(), Activation::Relu, Activation::Tanh, FINAL_INIT, &mut r)
            })
            .collect();
        let mut r = rng::substream(seed, rng::tag::AGENT_INIT, 0);
        let critic = Mlp::new(&shape.critic_sizes(), Activation::Relu, Activation::Identity, FINAL_INIT, &mut r);
        Self::from_networks(shape, hyper, actors.clone(), actors, critic.clone(), critic)
    }

    pub fn from_networks(
        shape: AgentShape,
        hyper: Hyper,
        actors: Vec<Mlp>,
        actor_targets: Vec<Mlp>,
        critic: Mlp,
        critic_target: Mlp,
    ) -> Self {
        let actor_opts = actors.iter().map(|a| Optimizer::new(hyper.optimizer, hyper.actor_lr, a)).collect();
        let critic_opt = Optimizer::new(hyper.optimizer, hyper.critic_lr, &critic);
        EnsembleAgent { shape, hyper, actors, actor_targets, critic, critic_target, actor_opts, critic_opt }
    }

    pub fn ensemble_len(&self) -> usize {
        self.actors.len()
    }

    /// Greedy action of actor `j`.
    pub fn act(&self, state: &[f64], j: usize) -> Vec<f64> {
        let x = ArrayView2::from_shape((1, state.len()), state).expect("state row");
        self.actors[j].forward(x).into_raw_vec_and_offset().0
    }

    pub fn q_values(&self, states: ArrayView2<'_, f64>, actions: ArrayView2<'_, f64>) -> Array1<f64> {
        let x = concatenate![Axis(1), states, actions];
        self.critic.forward(x.view()).column(0).to_owned()
    }

    /// `r + discount * max_j Q'(s', mu'_j(s'))`.
    pub fn target_values(&self, batch: &Batch) -> Array1<f64> {
        let mut best = Array1::from_elem(batch.len(), f64::NEG_INFINITY);
        for t in &self.actor_targets {
            let a = t.forward(batch.next_states.view());
            let x = concatenate![Axis(1), batch.next_states.view(), a.view()];
            let q = self.critic_target.forward(x.view());
            best.zip_mut_with(&q.column(0), |b, &q| *b = b.max(q));
        }
        &batch.rewards + &(best * self.hyper.discount)
    }

    /// One regression step of the critic towards the targets; returns the MSE before the step.
    pub fn critic_update(&mut self, batch: &Batch) -> f64 {
        let y = self.target_values(batch);
        let x = concatenate![Axis(1), batch.states.view(), batch.actions.view()];
        let cache = self.critic.forward_cached(x.view());
        let err = &cache.output().column(0) - &y;
        let n = batch.len() as f64;
        let loss = err.mapv(|e| e * e).sum() / n;
        let grad = (err * (2.0 / n)).insert_axis(Axis(1));
        let (g, _) = self.critic.backward(&cache, &grad);
        self.critic_opt.step(&mut self.critic, &g);
        loss
    }

    /// Deterministic policy-gradient step of actor `j` on the rows its mask selects;
    /// returns the mean critic value of its actions before the step.
    pub fn actor_update(&mut self, j: usize, batch: &Batch) -> Result<f64> {
        let rows = batch.selected(j);
        if rows.is_empty() {
            return Err(Error::EmptySubsample { actor: j });
        }
        let states = batch.states.select(Axis(0), &rows);
        let actor_cache = self.actors[j].forward_cached(states.view());
        let x = concatenate![Axis(1), states.view(), actor_cache.output().view()];
        let critic_cache = self.critic.forward_cached(x.view());
        let n = rows.len() as f64;
        let mean_q = critic_cache.output().sum() / n;
        let (_, gin) = self.critic.backward(&critic_cache, &Array2::from_elem((rows.len(), 1), -1.0 / n));
        let grad_a = gin.slice(s![.., self.shape.state_dim..]).to_owned();
        let (g, _) = self.actors[j].backward(&actor_cache, &grad_a);
        self.actor_opts[j].step(&mut self.actors[j], &g);
        Ok(mean_q)
    }

    pub fn soft_update(&mut self) {
        let tau = self.hyper.soft_update;
        self.critic_target.soft_update_from(&self.critic, tau);
        for (t, a) in self.actor_targets.iter_mut().zip(&self.actors) {
            t.soft_update_from(a, tau);
        }
    }

    /// Critic step, one step per actor on its subsample, then target tracking.
    pub fn train_step(&mut self, batch: &Batch) -> TrainStats {
        let critic_loss = self.critic_update(batch);
        let actor_q = (0..self.ensemble_len()).map(|j| self.actor_update(j, batch).ok()).collect();
        self.soft_update();
        TrainStats { critic_loss, actor_q }
    }

    pub fn is_finite(&self) -> bool {
        self.critic.is_finite() && self.actors.iter().all(Mlp::is_finite)
    }
}

/// Uniformly picks the actor that drives an executor for one episode.
pub fn thompson_select<R: Rng + ?Sized>(ensemble: usize, rng: &mut R) -> usize {
    rng.random_range(0..ensemble)
}

/// With probability `eps` a uniform action in `[-1, 1]^d`, otherwise `greedy`.
pub fn epsilon_greedy_act<R: Rng + ?Sized>(greedy: Vec<f64>, eps: f64, rng: &mut R) -> Vec<f64> {
    if rng.random_bool(eps.clamp(0.0, 1.0)) {
        (0..greedy.len()).map(|_| rng.random_range(-1.0..=1.0)).collect()
    } else {
        greedy
    }
}

/// Adds `N(0, sigma^2)` to every entry and clips to `[-1, 1]`.
pub fn add_gaussian_noise<R: Rng + ?Sized>(action: &mut [f64], sigma: f64, rng: &mut R) {
    if sigma <= 0.0 {
        return;
    }
    let n = Normal::new(0.0, sigma).expect("positive sigma");
    for a in action {
        *a = (*a + n.sample(rng)).clamp(-1.0, 1.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn shape(ensemble: usize) -> AgentShape {
        AgentShape { state_dim: 3, action_dim: 2, hidden_width: 16, hidden_layers: 2, ensemble }
    }

    fn hyper() -> Hyper {
        Hyper { discount: 0.9, soft_update: 0.1, actor_lr: 1e-2, critic_lr: 1e-2, optimizer: OptimizerKind::Adam }
    }

    fn batch(masks: Array2<bool>) -> Batch {
        let n = masks.nrows();
        Batch {
            states: Array2::from_shape_fn((n, 3), |(i, j)| ((i * 3 + j) as f64 * 0.37).sin()),
            actions: Array2::from_shape_fn((n, 2), |(i, j)| ((i + j) as f64 * 0.21).cos() * 0.5),
            rewards: Array1::from_shape_fn(n, |i| i as f64 * 0.1),
            next_states: Array2::from_shape_fn((n, 3), |(i, j)| ((i * 3 + j) as f64 * 0.41).cos()),
            masks,
        }
    }

    #[test]
    fn target_uses_maximum_over_target_actors() {
        let agent = EnsembleAgent::new(shape(3), hyper(), 1);
        let b = batch(Array2::from_elem((4, 3), true));
        let y = agent.target_values(&b);
        for i in 0..4 {
            let s1 = b.next_states.row(i).to_owned().insert_axis(Axis(0));
            let best = agent
                .actor_targets
                .iter()
                .map(|a| {
                    let act = a.forward(s1.view());
                    let x = concatenate![Axis(1), s1.view(), act.view()];
                    agent.critic_target.forward(x.view())[[0, 0]]
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((y[i] - (b.rewards[i] + 0.9 * best)).abs() < 1e-12);
        }
    }

    #[test]
    fn actor_update_only_touches_its_actor_and_respects_masks() {
        let mut agent = EnsembleAgent::new(shape(2), hyper(), 2);
        let masks = array![[true, false], [false, false], [true, false]];
        let b = batch(masks);
        let before = agent.actors[1].clone();
        assert!(agent.actor_update(0, &b).is_ok());
        assert!(matches!(agent.actor_update(1, &b), Err(Error::EmptySubsample { actor: 1 })));
        assert_eq!(agent.actors[1], before);
    }

    #[test]
    fn actor_step_increases_critic_value() {
        let mut agent = EnsembleAgent::new(shape(1), hyper(), 3);
        let b = batch(Array2::from_elem((8, 1), true));
        let q0 = agent.actor_update(0, &b).unwrap();
        for _ in 0..20 {
            agent.actor_update(0, &b).unwrap();
        }
        let q1 = agent.actor_update(0, &b).unwrap();
        assert!(q1 > q0, "{q1} <= {q0}");
    }

    #[test]
    fn critic_fits_fixed_targets() {
        let mut h = hyper();
        h.discount = 0.0;
        let mut agent = EnsembleAgent::new(shape(1), h, 4);
        let b = batch(Array2::from_elem((8, 1), true));
        let first = agent.critic_update(&b);
        let mut last = first;
        for _ in 0..300 {
            last = agent.critic_update(&b);
        }
        assert!(last < 0.05 * first, "{last} vs {first}");
    }

    #[test]
    fn soft_update_moves_targets_by_tau() {
        let mut agent = EnsembleAgent::new(shape(2), hyper(), 5);
        let b = batch(Array2::from_elem((6, 2), true));
        agent.critic_update(&b);
        let (online, target) = (agent.critic.param_slices().concat(), agent.critic_target.param_slices().concat());
        agent.soft_update();
        let after = agent.critic_target.param_slices().concat();
        for i in 0..online.len() {
            assert!((after[i] - (0.1 * online[i] + 0.9 * target[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn exploration_helpers() {
        let mut r = rng::stream(1, rng::tag::EXPLORATION);
        assert_eq!(epsilon_greedy_act(vec![0.5, 0.5], 0.0, &mut r), vec![0.5, 0.5]);
        let a = epsilon_greedy_act(vec![0.5; 4], 1.0, &mut r);
        assert!(a.iter().all(|x| x.abs() <= 1.0) && a != vec![0.5; 4]);
        let mut a = vec![0.99; 100];
        add_gaussian_noise(&mut a, 0.5, &mut r);
        assert!(a.iter().all(|x| x.abs() <= 1.0));
        let picks: Vec<usize> = (0..1000).map(|_| thompson_select(5, &mut r)).collect();
        assert!((0..5).all(|j| picks.contains(&j)));
    }
}
