//! Block-fading channel generation and SINR evaluation.
//!
//! Gains combine distance pathloss with an exponential(1) power fade drawn
//! independently per (transmitting BS, user, RB) each TTI. Cells are laid out on a
//! square grid; each BS sits at the centre of its own square coverage area.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::netmodel::{Fading, PowerAllocation, PuncturingMask, SimConfig, UrllcPower};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserClass {
    Embb,
    Urllc,
}

/// Geometry of one scenario. Coordinates are metres.
#[derive(Debug, Clone, PartialEq)]
pub struct UserPlacement {
    pub cell_side: f64,
    pub base_stations: Vec<[f64; 2]>,
    /// `embb[k][v]`: position of eMBB user `v` served by BS `k`.
    pub embb: Vec<Vec<[f64; 2]>>,
    pub urllc: Vec<Vec<[f64; 2]>>,
}

fn grid_columns(cells: usize) -> usize {
    (cells as f64).sqrt().ceil() as usize
}

impl UserPlacement {
    /// Uniform placement inside each serving square, rejecting points closer than
    /// `min_user_distance` to the BS.
    pub fn random<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Self {
        let side = cfg.network.cell_side;
        let cols = grid_columns(cfg.num_cells());
        let base_stations: Vec<[f64; 2]> = (0..cfg.num_cells())
            .map(|k| {
                let (c, r) = (k % cols, k / cols);
                [(c as f64 + 0.5) * side, (r as f64 + 0.5) * side]
            })
            .collect();
        let mut draw = |bs: [f64; 2]| loop {
            let x = bs[0] + (rng.random::<f64>() - 0.5) * side;
            let y = bs[1] + (rng.random::<f64>() - 0.5) * side;
            if ((x - bs[0]).powi(2) + (y - bs[1]).powi(2)).sqrt() >= cfg.network.min_user_distance {
                break [x, y];
            }
        };
        let mut embb = Vec::with_capacity(cfg.num_cells());
        let mut urllc = Vec::with_capacity(cfg.num_cells());
        for &bs in &base_stations {
            embb.push((0..cfg.embb_users()).map(|_| draw(bs)).collect());
            urllc.push((0..cfg.urllc_users()).map(|_| draw(bs)).collect());
        }
        UserPlacement { cell_side: side, base_stations, embb, urllc }
    }

    pub fn users(&self, class: UserClass, cell: usize) -> &[[f64; 2]] {
        match class {
            UserClass::Embb => &self.embb[cell],
            UserClass::Urllc => &self.urllc[cell],
        }
    }

    /// Distance in metres from BS `tx` to user `v` of cell `serv`.
    pub fn distance(&self, class: UserClass, tx: usize, serv: usize, v: usize) -> f64 {
        let u = self.users(class, serv)[v];
        let b = self.base_stations[tx];
        ((u[0] - b[0]).powi(2) + (u[1] - b[1]).powi(2)).sqrt()
    }

    /// True when every user lies in its serving square and outside the exclusion disc.
    pub fn is_consistent(&self, min_distance: f64) -> bool {
        let half = self.cell_side / 2.0 + 1e-9;
        self.base_stations.iter().enumerate().all(|(k, bs)| {
            self.embb[k].iter().chain(self.urllc[k].iter()).all(|u| {
                let d = ((u[0] - bs[0]).powi(2) + (u[1] - bs[1]).powi(2)).sqrt();
                (u[0] - bs[0]).abs() <= half && (u[1] - bs[1]).abs() <= half && d >= min_distance
            })
        })
    }
}

/// Pathloss in dB for a distance in metres (the model is parameterised in km).
pub fn pathloss_db(distance_m: f64, cfg: &SimConfig) -> f64 {
    cfg.radio.pathloss_intercept_db + cfg.radio.pathloss_slope_db * (distance_m / 1000.0).log10()
}

/// Linear power gains for one TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub tti: u64,
    cells: usize,
    rbs: usize,
    embb_users: usize,
    urllc_users: usize,
    g_embb: Vec<f64>,
    g_urllc: Vec<f64>,
}

impl ChannelRealization {
    /// A realization with every gain produced by `f(class, tx, serv, v, m)`.
    pub fn from_fn(
        cfg: &SimConfig,
        tti: u64,
        mut f: impl FnMut(UserClass, usize, usize, usize, usize) -> f64,
    ) -> Self {
        let (k_n, m_n, ve, vu) = (cfg.num_cells(), cfg.num_rbs(), cfg.embb_users(), cfg.urllc_users());
        let mut g_embb = Vec::with_capacity(k_n * k_n * ve * m_n);
        let mut g_urllc = Vec::with_capacity(k_n * k_n * vu * m_n);
        for tx in 0..k_n {
            for serv in 0..k_n {
                for v in 0..ve {
                    for m in 0..m_n {
                        g_embb.push(f(UserClass::Embb, tx, serv, v, m));
                    }
                }
                for v in 0..vu {
                    for m in 0..m_n {
                        g_urllc.push(f(UserClass::Urllc, tx, serv, v, m));
                    }
                }
            }
        }
        ChannelRealization { tti, cells: k_n, rbs: m_n, embb_users: ve, urllc_users: vu, g_embb, g_urllc }
    }

    pub fn uniform(cfg: &SimConfig, tti: u64, gain: f64) -> Self {
        Self::from_fn(cfg, tti, |_, _, _, _, _| gain)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }
    pub fn rbs(&self) -> usize {
        self.rbs
    }

    fn index(&self, class: UserClass, tx: usize, serv: usize, v: usize, m: usize) -> usize {
        let users = match class {
            UserClass::Embb => self.embb_users,
            UserClass::Urllc => self.urllc_users,
        };
        ((tx * self.cells + serv) * users + v) * self.rbs + m
    }

    pub fn gain(&self, class: UserClass, tx: usize, serv: usize, v: usize, m: usize) -> f64 {
        let i = self.index(class, tx, serv, v, m);
        match class {
            UserClass::Embb => self.g_embb[i],
            UserClass::Urllc => self.g_urllc[i],
        }
    }

    pub fn set_gain(&mut self, class: UserClass, tx: usize, serv: usize, v: usize, m: usize, g: f64) {
        let i = self.index(class, tx, serv, v, m);
        match class {
            UserClass::Embb => self.g_embb[i] = g,
            UserClass::Urllc => self.g_urllc[i] = g,
        }
    }

    pub fn g_embb(&self, tx: usize, serv: usize, v: usize, m: usize) -> f64 {
        self.gain(UserClass::Embb, tx, serv, v, m)
    }

    pub fn g_urllc(&self, tx: usize, serv: usize, v: usize, m: usize) -> f64 {
        self.gain(UserClass::Urllc, tx, serv, v, m)
    }

    pub fn all_gains(&self) -> impl Iterator<Item = f64> + '_ {
        self.g_embb.iter().chain(self.g_urllc.iter()).copied()
    }

    /// Debug dump: `tti,tx_cell,serv_cell,user_class,user,rb,gain`.
    pub fn write_csv<W: Write>(&self, out: &mut W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(out, "tti,tx_cell,serv_cell,user_class,user,rb,gain")?;
        }
        for (class, name, users) in
            [(UserClass::Embb, "embb", self.embb_users), (UserClass::Urllc, "urllc", self.urllc_users)]
        {
            for tx in 0..self.cells {
                for serv in 0..self.cells {
                    for v in 0..users {
                        for m in 0..self.rbs {
                            writeln!(
                                out,
                                "{},{},{},{},{},{},{:e}",
                                self.tti,
                                tx,
                                serv,
                                name,
                                v,
                                m,
                                self.gain(class, tx, serv, v, m)
                            )?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Draws one TTI of gains; deterministic given the stream state.
pub fn draw_channel<R: Rng + ?Sized>(
    placement: &UserPlacement,
    cfg: &SimConfig,
    tti: u64,
    rng: &mut R,
) -> ChannelRealization {
    let fading = cfg.radio.fading;
    ChannelRealization::from_fn(cfg, tti, |class, tx, serv, v, _m| {
        let d = placement.distance(class, tx, serv, v);
        let mean = 10f64.powf(-pathloss_db(d, cfg) / 10.0);
        match fading {
            Fading::Rayleigh => {
                let h: f64 = Exp1.sample(rng);
                mean * h
            }
            Fading::PathlossOnly => mean,
        }
    })
}

/// Everything needed to evaluate SINRs jointly across cells for one TTI.
#[derive(Debug, Clone, Copy)]
pub struct SinrContext<'a> {
    pub chan: &'a ChannelRealization,
    pub powers: &'a [PowerAllocation],
    pub punctures: &'a [PuncturingMask],
    pub noise_w: f64,
    pub urllc_power: UrllcPower,
    pub p_max: f64,
}

impl<'a> SinrContext<'a> {
    pub fn new(
        cfg: &SimConfig,
        chan: &'a ChannelRealization,
        powers: &'a [PowerAllocation],
        punctures: &'a [PuncturingMask],
    ) -> Self {
        SinrContext {
            chan,
            powers,
            punctures,
            noise_w: cfg.noise_power_w(),
            urllc_power: cfg.radio.urllc_power,
            p_max: cfg.radio.p_max,
        }
    }

    pub fn with_noise(mut self, noise_w: f64) -> Self {
        self.noise_w = noise_w;
        self
    }

    /// Power of a URLLC transmission by BS `k` on RB `m`.
    pub fn urllc_tx_power(&self, k: usize, m: usize) -> f64 {
        match self.urllc_power {
            UrllcPower::ReuseEmbb => self.powers[k].rb_power(m),
            UrllcPower::EqualShare => self.p_max / self.chan.rbs() as f64,
        }
    }

    /// eMBB-part and URLLC-part interference power that BS `kp` puts on RB `m`,
    /// weighted by the fraction of mini-slots it punctures there.
    fn interferer_split(&self, kp: usize, m: usize) -> (f64, f64) {
        let frac = self.punctures[kp].punctured_fraction(m);
        ((1.0 - frac) * self.powers[kp].rb_power(m), frac * self.urllc_tx_power(kp, m))
    }

    /// SINR of eMBB user `v` of cell `k` on RB `m`.
    pub fn embb(&self, k: usize, v: usize, m: usize) -> f64 {
        let signal = self.powers[k].get(v, m) * self.chan.g_embb(k, k, v, m);
        let mut embb_interf = 0.0;
        let mut urllc_interf = 0.0;
        for kp in (0..self.chan.cells()).filter(|&kp| kp != k) {
            let g = self.chan.g_embb(kp, k, v, m);
            let (pe, pu) = self.interferer_split(kp, m);
            embb_interf += pe * g;
            urllc_interf += pu * g;
        }
        signal / (embb_interf + urllc_interf + self.noise_w)
    }

    /// SINR of URLLC user `v` of cell `k` on RB `m`.
    pub fn urllc(&self, k: usize, v: usize, m: usize) -> f64 {
        let signal = self.urllc_tx_power(k, m) * self.chan.g_urllc(k, k, v, m);
        let mut urllc_interf = 0.0;
        let mut embb_interf = 0.0;
        for kp in (0..self.chan.cells()).filter(|&kp| kp != k) {
            let g = self.chan.g_urllc(kp, k, v, m);
            let (pe, pu) = self.interferer_split(kp, m);
            urllc_interf += pu * g;
            embb_interf += pe * g;
        }
        signal / (urllc_interf + embb_interf + self.noise_w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn single_cell() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.network.num_cells = 1;
        cfg
    }

    #[test]
    fn pathloss_reference_points() {
        let cfg = SimConfig::default();
        assert!((pathloss_db(1000.0, &cfg) - 120.8).abs() < 1e-12);
        assert!((pathloss_db(10_000.0, &cfg) - 158.3).abs() < 1e-12);
        let gain = 10f64.powf(-pathloss_db(1000.0, &cfg) / 10.0);
        assert!((gain / 10f64.powf(-12.08) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_fading_has_unit_mean() {
        let mut cfg = SimConfig::default();
        cfg.network.num_cells = 1;
        cfg.network.embb_users_per_cell = 1;
        cfg.network.urllc_users_per_cell = 1;
        cfg.radio.num_rbs = 10;
        // Users pinned at exactly 1 km so the pathloss factor is known.
        let placement = UserPlacement {
            cell_side: 4000.0,
            base_stations: vec![[0.0, 0.0]],
            embb: vec![vec![[1000.0, 0.0]]],
            urllc: vec![vec![[0.0, 1000.0]]],
        };
        let scale = 10f64.powf(12.08);
        let mut rng = rng::stream(3, rng::tag::CHANNEL);
        let mut sum = 0.0;
        let mut n = 0usize;
        while n < 100_000 {
            let chan = draw_channel(&placement, &cfg, 0, &mut rng);
            for h in chan.all_gains() {
                sum += h * scale;
                n += 1;
            }
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn draws_are_reproducible() {
        let cfg = SimConfig::default();
        let placement = UserPlacement::random(&cfg, &mut rng::stream(1, rng::tag::PLACEMENT));
        assert!(placement.is_consistent(cfg.network.min_user_distance));
        let a = draw_channel(&placement, &cfg, 4, &mut rng::stream(9, rng::tag::CHANNEL));
        let b = draw_channel(&placement, &cfg, 4, &mut rng::stream(9, rng::tag::CHANNEL));
        assert_eq!(a, b);
        assert!(a.all_gains().all(|g| g > 0.0 && g.is_finite()));
    }

    #[test]
    fn single_cell_embb_sinr() {
        let cfg = single_cell();
        let chan = ChannelRealization::uniform(&cfg, 0, 1e-12);
        let mut p = PowerAllocation::new(cfg.embb_users(), cfg.num_rbs());
        p.set(0, 0, 1.0);
        let eta = PuncturingMask::new(cfg.urllc_users(), cfg.num_rbs(), cfg.num_minislots());
        let powers = [p];
        let masks = [eta];
        let ctx = SinrContext::new(&cfg, &chan, &powers, &masks).with_noise(1e-13);
        assert!((ctx.embb(0, 0, 0) - 10.0).abs() < 1e-9);
        assert_eq!(ctx.embb(0, 1, 0), 0.0);
    }

    #[test]
    fn single_cell_urllc_sinr() {
        let cfg = single_cell();
        let chan = ChannelRealization::uniform(&cfg, 0, 2e-12);
        let mut p = PowerAllocation::new(cfg.embb_users(), cfg.num_rbs());
        p.set(2, 5, 0.5);
        let powers = [p];
        let masks = [PuncturingMask::new(cfg.urllc_users(), cfg.num_rbs(), cfg.num_minislots())];
        let ctx = SinrContext::new(&cfg, &chan, &powers, &masks).with_noise(1e-13);
        assert!((ctx.urllc(0, 1, 5) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn silent_interferers_reduce_to_snr() {
        let mut cfg = SimConfig::default();
        cfg.network.num_cells = 3;
        let chan = ChannelRealization::uniform(&cfg, 0, 1e-10);
        let mut powers = vec![PowerAllocation::new(cfg.embb_users(), cfg.num_rbs()); 3];
        powers[1].set(0, 2, 2.0);
        let masks = vec![PuncturingMask::new(cfg.urllc_users(), cfg.num_rbs(), cfg.num_minislots()); 3];
        let ctx = SinrContext::new(&cfg, &chan, &powers, &masks);
        let snr = 2.0 * 1e-10 / cfg.noise_power_w();
        assert!((ctx.embb(1, 0, 2) / snr - 1.0).abs() < 1e-12);
        assert!((ctx.urllc(1, 3, 2) / snr - 1.0).abs() < 1e-12);
    }
}
