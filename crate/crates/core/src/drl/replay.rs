use ndarray::{Array1, Array2};
use rand::Rng;

use crate::env::Experience;
use crate::{Error, Result};

/// Mini-batch drawn from the buffer. `masks[[i, j]]` says whether sample `i`
/// trains actor `j`.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub masks: Array2<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    /// Row indices selected by actor `j`'s mask.
    pub fn selected(&self, j: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.masks[[i, j]]).collect()
    }
}

/// Ring buffer of transitions, each tagged with a bootstrap mask drawn at insertion.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    heads: usize,
    mask_prob: f64,
    states: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_states: Vec<f64>,
    masks: Vec<bool>,
    len: usize,
    head: usize,
    inserted: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize, heads: usize, mask_prob: f64) -> Self {
        assert!(capacity > 0 && heads > 0);
        ReplayBuffer {
            capacity,
            state_dim,
            action_dim,
            heads,
            mask_prob,
            states: vec![0.0; capacity * state_dim],
            actions: vec![0.0; capacity * action_dim],
            rewards: vec![0.0; capacity],
            next_states: vec![0.0; capacity * state_dim],
            masks: vec![false; capacity * heads],
            len: 0,
            head: 0,
            inserted: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// Stores `e`, overwriting the oldest entry when full. With a single head the
    /// mask is always set.
    pub fn push<R: Rng + ?Sized>(&mut self, e: &Experience, rng: &mut R) -> Result<()> {
        if e.state.len() != self.state_dim || e.next_state.len() != self.state_dim || e.action.len() != self.action_dim
        {
            return Err(Error::Shape(format!(
                "experience dims ({}, {}, {}) do not match buffer ({}, {})",
                e.state.len(),
                e.action.len(),
                e.next_state.len(),
                self.state_dim,
                self.action_dim
            )));
        }
        let i = self.head;
        let (sd, ad) = (self.state_dim, self.action_dim);
        self.states[i * sd..(i + 1) * sd].copy_from_slice(&e.state);
        self.next_states[i * sd..(i + 1) * sd].copy_from_slice(&e.next_state);
        self.actions[i * ad..(i + 1) * ad].copy_from_slice(&e.action);
        self.rewards[i] = e.reward;
        for j in 0..self.heads {
            self.masks[i * self.heads + j] = self.heads == 1 || rng.random_bool(self.mask_prob);
        }
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
        self.inserted += 1;
        Ok(())
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Batch> {
        if self.len == 0 {
            return Err(Error::Shape("sampling from an empty replay buffer".into()));
        }
        let idx: Vec<usize> = (0..batch).map(|_| rng.random_range(0..self.len)).collect();
        Ok(self.gather(&idx))
    }

    pub fn gather(&self, idx: &[usize]) -> Batch {
        let (sd, ad, h) = (self.state_dim, self.action_dim, self.heads);
        let rows = |src: &[f64], d: usize| {
            Array2::from_shape_fn((idx.len(), d), |(r, c)| src[idx[r] * d + c])
        };
        Batch {
            states: rows(&self.states, sd),
            actions: rows(&self.actions, ad),
            rewards: idx.iter().map(|&i| self.rewards[i]).collect(),
            next_states: rows(&self.next_states, sd),
            masks: Array2::from_shape_fn((idx.len(), h), |(r, c)| self.masks[idx[r] * h + c]),
        }
    }
}
