use std::fmt;

use super::SimConfig;

/// `beta[v][m]`: eMBB user `v` holds RB `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RbAssignment {
    users: usize,
    rbs: usize,
    beta: Vec<bool>,
}

impl RbAssignment {
    pub fn new(users: usize, rbs: usize) -> Self {
        RbAssignment { users, rbs, beta: vec![false; users * rbs] }
    }

    /// Builds an assignment from an owner per RB (`None` leaves the RB idle).
    pub fn from_owners(users: usize, owners: &[Option<usize>]) -> Self {
        let mut a = RbAssignment::new(users, owners.len());
        for (m, owner) in owners.iter().enumerate() {
            if let Some(v) = owner {
                a.set(*v, m, true);
            }
        }
        a
    }

    pub fn users(&self) -> usize {
        self.users
    }
    pub fn rbs(&self) -> usize {
        self.rbs
    }

    pub fn get(&self, v: usize, m: usize) -> bool {
        self.beta[v * self.rbs + m]
    }

    pub fn set(&mut self, v: usize, m: usize, on: bool) {
        self.beta[v * self.rbs + m] = on;
    }

    /// Lowest-index user holding RB `m`.
    pub fn owner(&self, m: usize) -> Option<usize> {
        (0..self.users).find(|&v| self.get(v, m))
    }
}

/// `p[v][m]`: eMBB transmit power in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    users: usize,
    rbs: usize,
    p: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(users: usize, rbs: usize) -> Self {
        PowerAllocation { users, rbs, p: vec![0.0; users * rbs] }
    }

    pub fn users(&self) -> usize {
        self.users
    }
    pub fn rbs(&self) -> usize {
        self.rbs
    }

    pub fn get(&self, v: usize, m: usize) -> f64 {
        self.p[v * self.rbs + m]
    }

    pub fn set(&mut self, v: usize, m: usize, watts: f64) {
        self.p[v * self.rbs + m] = watts;
    }

    /// Total power radiated on RB `m` (at most one user is non-zero on a valid decision).
    pub fn rb_power(&self, m: usize) -> f64 {
        (0..self.users).map(|v| self.get(v, m)).sum()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// `eta[v][m][l]`: URLLC user `v` punctures mini-slot `l` of RB `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuncturingMask {
    users: usize,
    rbs: usize,
    minislots: usize,
    eta: Vec<bool>,
}

impl PuncturingMask {
    pub fn new(users: usize, rbs: usize, minislots: usize) -> Self {
        PuncturingMask { users, rbs, minislots, eta: vec![false; users * rbs * minislots] }
    }

    pub fn users(&self) -> usize {
        self.users
    }
    pub fn rbs(&self) -> usize {
        self.rbs
    }
    pub fn minislots(&self) -> usize {
        self.minislots
    }

    fn idx(&self, v: usize, m: usize, l: usize) -> usize {
        (v * self.rbs + m) * self.minislots + l
    }

    pub fn get(&self, v: usize, m: usize, l: usize) -> bool {
        self.eta[self.idx(v, m, l)]
    }

    pub fn set(&mut self, v: usize, m: usize, l: usize, on: bool) {
        let i = self.idx(v, m, l);
        self.eta[i] = on;
    }

    /// The URLLC user occupying `(m, l)`, lowest index first.
    pub fn puncturer(&self, m: usize, l: usize) -> Option<usize> {
        (0..self.users).find(|&v| self.get(v, m, l))
    }

    /// Clears `(m, l)` for every user, then hands it to `v`.
    pub fn assign(&mut self, v: usize, m: usize, l: usize) {
        for u in 0..self.users {
            self.set(u, m, l, false);
        }
        self.set(v, m, l, true);
    }

    /// Mini-slots of RB `m` punctured by any user.
    pub fn punctured_count(&self, m: usize) -> usize {
        (0..self.minislots).filter(|&l| self.puncturer(m, l).is_some()).count()
    }

    /// Mini-slots of RB `m` punctured by user `v`.
    pub fn user_count(&self, v: usize, m: usize) -> usize {
        (0..self.minislots).filter(|&l| self.get(v, m, l)).count()
    }

    pub fn punctured_fraction(&self, m: usize) -> f64 {
        self.punctured_count(m) as f64 / self.minislots as f64
    }

    pub fn total(&self) -> usize {
        self.eta.iter().filter(|&&b| b).count()
    }
}

/// One cell's joint decision for one TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationDecision {
    pub cell: usize,
    pub tti: u64,
    pub assignment: RbAssignment,
    pub power: PowerAllocation,
    pub puncture: PuncturingMask,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintViolation {
    Shape(String),
    /// More than one eMBB user on RB `m`.
    RbShared { rb: usize, users: usize },
    /// More than one URLLC user on `(m, l)`.
    MinislotShared { rb: usize, minislot: usize, users: usize },
    /// A user punctures more than `L` mini-slots of RB `m`.
    TooManyPunctures { user: usize, rb: usize, count: usize },
    PowerBudget { total: f64, p_max: f64 },
    NegativePower { user: usize, rb: usize, watts: f64 },
    PowerWithoutRb { user: usize, rb: usize, watts: f64 },
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl AllocationDecision {
    /// An empty decision (nothing assigned, no power, no punctures).
    pub fn empty(cfg: &SimConfig, cell: usize, tti: u64) -> Self {
        AllocationDecision {
            cell,
            tti,
            assignment: RbAssignment::new(cfg.embb_users(), cfg.num_rbs()),
            power: PowerAllocation::new(cfg.embb_users(), cfg.num_rbs()),
            puncture: PuncturingMask::new(cfg.urllc_users(), cfg.num_rbs(), cfg.num_minislots()),
        }
    }

    /// Checks every allocation constraint of the scheduling problem; the
    /// reliability constraint is statistical and is tracked by the outage
    /// estimator instead.
    pub fn violations(&self, cfg: &SimConfig) -> Vec<ConstraintViolation> {
        let mut out = Vec::new();
        let (ve, vu, m_n, l_n) = (cfg.embb_users(), cfg.urllc_users(), cfg.num_rbs(), cfg.num_minislots());
        if self.assignment.users() != ve
            || self.assignment.rbs() != m_n
            || self.power.users() != ve
            || self.power.rbs() != m_n
            || self.puncture.users() != vu
            || self.puncture.rbs() != m_n
            || self.puncture.minislots() != l_n
        {
            out.push(ConstraintViolation::Shape(format!(
                "decision shape does not match config (V_e={ve}, V_u={vu}, M={m_n}, L={l_n})"
            )));
            return out;
        }
        for m in 0..m_n {
            let users = (0..ve).filter(|&v| self.assignment.get(v, m)).count();
            if users > 1 {
                out.push(ConstraintViolation::RbShared { rb: m, users });
            }
            for l in 0..l_n {
                let users = (0..vu).filter(|&v| self.puncture.get(v, m, l)).count();
                if users > 1 {
                    out.push(ConstraintViolation::MinislotShared { rb: m, minislot: l, users });
                }
            }
            for v in 0..vu {
                let count = self.puncture.user_count(v, m);
                if count > l_n {
                    out.push(ConstraintViolation::TooManyPunctures { user: v, rb: m, count });
                }
            }
        }
        for v in 0..ve {
            for m in 0..m_n {
                let p = self.power.get(v, m);
                if !(p >= 0.0) {
                    out.push(ConstraintViolation::NegativePower { user: v, rb: m, watts: p });
                } else if p > 0.0 && !self.assignment.get(v, m) {
                    out.push(ConstraintViolation::PowerWithoutRb { user: v, rb: m, watts: p });
                }
            }
        }
        let total = self.power.total();
        // Relative slack for the rounding of a softmax that sums to p_max.
        if !(total <= cfg.radio.p_max * (1.0 + 1e-12)) {
            out.push(ConstraintViolation::PowerBudget { total, p_max: cfg.radio.p_max });
        }
        out
    }

    pub fn is_feasible(&self, cfg: &SimConfig) -> bool {
        self.violations(cfg).is_empty()
    }
}
