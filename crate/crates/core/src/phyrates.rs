//! Rate mathematics: punctured eMBB rates, finite-blocklength URLLC rates and the
//! Gaussian tail machinery behind them.
//!
//! The finite-blocklength rate is evaluated per RB. The printed form of the URLLC
//! rate carries a sum over RBs inside a per-RB quantity; that inner sum is treated
//! as a typo and callers aggregate RBs explicitly.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::channel::SinrContext;
use crate::error::{Error, Result};
use crate::netmodel::{AllocationDecision, SimConfig};

/// Gaussian tail probability `Q(z) = P[N(0,1) > z]`.
pub fn q_function(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// Standard normal CDF.
fn phi_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Rational approximation of the normal quantile (Acklam), ~1e-9 relative.
fn quantile_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// `Q^{-1}(x)`: the `z` with `Q(z) = x`.
pub fn q_inverse(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("Q^-1 argument {x} outside (0, 1)")));
    }
    if x == 0.5 {
        return Ok(0.0);
    }
    // Q(z) = x  <=>  Phi(-z) = x. Refine the quantile of x with Halley steps.
    let mut w = quantile_guess(x);
    for _ in 0..3 {
        let e = phi_cdf(w) - x;
        let u = e * (2.0 * PI).sqrt() * (w * w / 2.0).exp();
        let step = u / (1.0 + w * u / 2.0);
        w -= step;
        if step.abs() <= 1e-15 * w.abs().max(1.0) {
            break;
        }
    }
    Ok(-w)
}

/// Channel dispersion `Y = 1 - 1/(1+chi)^2`.
pub fn dispersion(chi: f64) -> Result<f64> {
    if !(chi >= 0.0) {
        return Err(Error::Domain(format!("SINR {chi} must be non-negative")));
    }
    let d = 1.0 + chi;
    Ok(chi * (1.0 + d) / (d * d))
}

/// Rate of an eMBB user on one RB with `punctured` of its `L` mini-slots taken by URLLC, bit/s.
pub fn embb_rb_rate(chi: f64, punctured: usize, cfg: &SimConfig) -> f64 {
    let l = cfg.num_minislots();
    debug_assert!(punctured <= l, "punctured {punctured} > L = {l}");
    let kept = 1.0 - punctured.min(l) as f64 / l as f64;
    cfg.radio.rb_bandwidth * kept * (1.0 + chi).log2()
}

/// Sum rate of eMBB user `v` of the decision's cell across its RBs, bit/s.
pub fn embb_user_rate(decision: &AllocationDecision, ctx: &SinrContext<'_>, cfg: &SimConfig, v: usize) -> f64 {
    let k = decision.cell;
    (0..cfg.num_rbs())
        .filter(|&m| decision.assignment.get(v, m))
        .map(|m| embb_rb_rate(ctx.embb(k, v, m), decision.puncture.punctured_count(m), cfg))
        .sum()
}

/// Channel uses in `punctured` mini-slots of one RB.
pub fn urllc_blocklength(punctured: usize, cfg: &SimConfig) -> Result<usize> {
    if punctured == 0 {
        return Err(Error::Domain("blocklength of zero punctured mini-slots".into()));
    }
    Ok(punctured * cfg.radio.symbols_per_minislot * cfg.subcarriers_per_rb())
}

/// Finite-blocklength spectral efficiency before clamping:
/// `log2(1+chi) - sqrt(Y/W) Q^{-1}(x)`, bits per channel use.
pub fn fbl_efficiency_raw(chi: f64, channel_uses: usize, x: f64) -> Result<f64> {
    let y = dispersion(chi)?;
    let q = q_inverse(x)?;
    Ok((1.0 + chi).log2() - (y / channel_uses as f64).sqrt() * q)
}

fn check_target(x: f64) -> Result<()> {
    if !(x > 0.0 && x <= 0.5) {
        return Err(Error::Domain(format!("decode error target {x} outside (0, 0.5]")));
    }
    Ok(())
}

/// URLLC rate on one RB using `punctured` mini-slots at block error target `x`,
/// floored at zero, bit/s.
pub fn urllc_rb_rate(chi: f64, punctured: usize, x: f64, cfg: &SimConfig) -> Result<f64> {
    check_target(x)?;
    let w = urllc_blocklength(punctured, cfg)?;
    let eff = fbl_efficiency_raw(chi, w, x)?;
    let share = punctured as f64 / cfg.num_minislots() as f64;
    Ok(cfg.radio.rb_bandwidth * share * eff.max(0.0))
}

/// Block error probability of `r_cu` bits per channel use over `w` channel uses at SINR `chi`.
///
/// At `chi = 0` the dispersion vanishes; the result is 1 for any positive demand and
/// 0.5 for zero demand (the limit of `Q(0)`).
pub fn decode_error_prob(chi: f64, w: usize, r_cu: f64) -> f64 {
    let y = dispersion(chi.max(0.0)).unwrap_or(0.0);
    if y <= 0.0 {
        return if r_cu > 0.0 { 1.0 } else { 0.5 };
    }
    let capacity = (1.0 + chi).log2();
    q_function((capacity - r_cu) * (w as f64 / y).sqrt())
}

/// One RB's share of a transport block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbSegment {
    pub chi: f64,
    pub channel_uses: usize,
}

/// Largest payload (bits) a block spread over `segments` carries at error target `x`,
/// using the parallel-channel normal approximation; zero when negative.
pub fn tb_capacity_bits(segments: &[TbSegment], x: f64) -> Result<f64> {
    let q = q_inverse(x)?;
    let (mean, var) = tb_moments(segments)?;
    Ok((mean - var.sqrt() * q).max(0.0))
}

/// Error probability of a `bits`-bit block over `segments`.
pub fn tb_error_prob(segments: &[TbSegment], bits: f64) -> Result<f64> {
    let (mean, var) = tb_moments(segments)?;
    if var <= 0.0 {
        return Ok(if bits > 0.0 { 1.0 } else { 0.5 });
    }
    Ok(q_function((mean - bits) / var.sqrt()))
}

fn tb_moments(segments: &[TbSegment]) -> Result<(f64, f64)> {
    let mut mean = 0.0;
    let mut var = 0.0;
    for s in segments {
        let w = s.channel_uses as f64;
        mean += w * (1.0 + s.chi).log2();
        var += w * dispersion(s.chi)?;
    }
    Ok((mean, var))
}

/// Per-TTI rates of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub tti: u64,
    pub cell: usize,
    /// `embb[v]`, bit/s.
    pub embb: Vec<f64>,
    /// `urllc[v][m]` flattened as `v * M + m`, bit/s.
    pub urllc: Vec<f64>,
    pub punctured_fraction: Vec<f64>,
    /// (user, RB) pairs with punctures whose finite-blocklength rate was clamped at zero.
    pub clamped: usize,
}

impl RateReport {
    pub fn compute(decision: &AllocationDecision, ctx: &SinrContext<'_>, cfg: &SimConfig) -> Result<Self> {
        let k = decision.cell;
        let (m_n, vu) = (cfg.num_rbs(), cfg.urllc_users());
        let embb = (0..cfg.embb_users()).map(|v| embb_user_rate(decision, ctx, cfg, v)).collect();
        let mut urllc = vec![0.0; vu * m_n];
        let mut clamped = 0;
        let x = cfg.traffic.decode_error_target;
        for v in 0..vu {
            for m in 0..m_n {
                let n = decision.puncture.user_count(v, m);
                if n == 0 {
                    continue;
                }
                let chi = ctx.urllc(k, v, m);
                if fbl_efficiency_raw(chi, urllc_blocklength(n, cfg)?, x)? < 0.0 {
                    clamped += 1;
                }
                urllc[v * m_n + m] = urllc_rb_rate(chi, n, x, cfg)?;
            }
        }
        let punctured_fraction = (0..m_n).map(|m| decision.puncture.punctured_fraction(m)).collect();
        Ok(RateReport { tti: decision.tti, cell: k, embb, urllc, punctured_fraction, clamped })
    }

    pub fn embb_sum(&self) -> f64 {
        self.embb.iter().sum()
    }

    pub fn urllc_sum(&self) -> f64 {
        self.urllc.iter().sum()
    }
}
