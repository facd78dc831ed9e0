//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.
//!
//! `ORSCHED_ACCEPT_ONLY=1,3,7` restricts the run to the listed criteria.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;

use orsched::channel::{ChannelRealization, SinrContext, UserClass};
use orsched::drl::EnsembleAgent;
use orsched::env::{decode_action, update_dual_weight, ActionLayout, DecodeOptions, LinkEstimate, RawAction};
use orsched::experiments::{
    compare_with_oracle, desk_config, epsilon_baseline, gradient_check, harq_latency_census, random_config,
    tiny_config, tiny_instance,
};
use orsched::netmodel::{AllocationDecision, PowerAllocation, PuncturingMask, UrllcPower};
use orsched::orchestrator::{run_evaluation, run_training, EvalPolicy, EvalReport};
use orsched::phyrates::{decode_error_prob, dispersion, embb_rb_rate, urllc_blocklength, urllc_rb_rate};
use orsched::rng::{self, Stream};
use orsched::SimConfig;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn q_ref(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Inverse of `q_ref` by bisection down to adjacent floats.
fn q_inv_ref(x: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if q_ref(mid) > x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn log_uniform(r: &mut Stream, lo: f64, hi: f64) -> f64 {
    10f64.powf(r.random_range(lo.log10()..hi.log10()))
}

fn criterion_formulas() -> Outcome {
    let start = Instant::now();
    let mut r = rng::stream(101, rng::tag::CHANNEL);
    let cfg = SimConfig::default();
    let (b, l_n) = (cfg.radio.rb_bandwidth, cfg.num_minislots());
    let subcarriers = (cfg.radio.rb_bandwidth / cfg.radio.subcarrier_spacing).round() as usize;
    let mut worst = [0.0f64; 5];

    for _ in 0..1000 {
        let chi = log_uniform(&mut r, 1e-3, 1e4);
        let n = r.random_range(0..=l_n);
        let expected = b * (1.0 - n as f64 / l_n as f64) * (1.0 + chi).ln() / std::f64::consts::LN_2;
        worst[0] = worst[0].max(rel(embb_rb_rate(chi, n, &cfg), expected));
    }

    for _ in 0..1000 {
        let chi = log_uniform(&mut r, 1e-1, 1e4);
        let n = r.random_range(1..=l_n);
        let x = log_uniform(&mut r, 1e-9, 1e-1);
        let w = (n * cfg.radio.symbols_per_minislot * subcarriers) as f64;
        let y = 1.0 - 1.0 / ((1.0 + chi) * (1.0 + chi));
        let eff = (1.0 + chi).log2() - (y / w).sqrt() * q_inv_ref(x);
        let expected = b * (n as f64 / l_n as f64) * eff.max(0.0);
        let got = urllc_rb_rate(chi, n, x, &cfg).expect("rate");
        // The clamp at zero turns a tiny difference into an infinite relative one;
        // measure such cases against the Shannon term.
        let scale = if eff > 1e-3 { expected } else { b * (n as f64 / l_n as f64) * (1.0 + chi).log2() };
        worst[1] = worst[1].max((got - expected).abs() / scale.abs());
    }

    for _ in 0..1000 {
        let chi = log_uniform(&mut r, 1e-2, 1e6);
        let expected = 1.0 - (1.0 + chi).powi(-2);
        worst[2] = worst[2].max(rel(dispersion(chi).expect("dispersion"), expected));
    }

    let mut sinr_cases = 0;
    while sinr_cases < 1000 {
        let mut c = SimConfig::default();
        c.network.num_cells = r.random_range(1..=4);
        c.network.embb_users_per_cell = r.random_range(1..=4);
        c.network.urllc_users_per_cell = r.random_range(1..=4);
        c.radio.num_rbs = r.random_range(1..=6);
        c.radio.urllc_power = if r.random_bool(0.5) { UrllcPower::ReuseEmbb } else { UrllcPower::EqualShare };
        let (k_n, m_n, ve, vu, l_n) = (c.num_cells(), c.num_rbs(), c.embb_users(), c.urllc_users(), c.num_minislots());
        let chan = ChannelRealization::from_fn(&c, 0, |_, _, _, _, _| log_uniform(&mut r, 1e-14, 1e-8));
        let mut powers = Vec::new();
        let mut masks = Vec::new();
        for _ in 0..k_n {
            let mut p = PowerAllocation::new(ve, m_n);
            let mut mask = PuncturingMask::new(vu, m_n, l_n);
            for m in 0..m_n {
                p.set(r.random_range(0..ve), m, r.random_range(0.0..c.radio.p_max / m_n as f64));
                for l in 0..l_n {
                    if r.random_bool(0.3) {
                        mask.set(r.random_range(0..vu), m, l, true);
                    }
                }
            }
            powers.push(p);
            masks.push(mask);
        }
        let ctx = SinrContext::new(&c, &chan, &powers, &masks);
        let noise = 10f64.powf((c.radio.noise_psd + 10.0 * c.radio.rb_bandwidth.log10() + c.radio.noise_figure - 30.0) / 10.0);
        let rb_power = |k: usize, m: usize| (0..ve).map(|v| powers[k].get(v, m)).sum::<f64>();
        let frac = |k: usize, m: usize| {
            (0..l_n).filter(|&l| (0..vu).any(|v| masks[k].get(v, m, l))).count() as f64 / l_n as f64
        };
        let urllc_p = |k: usize, m: usize| match c.radio.urllc_power {
            UrllcPower::ReuseEmbb => rb_power(k, m),
            UrllcPower::EqualShare => c.radio.p_max / m_n as f64,
        };
        let k = r.random_range(0..k_n);
        let m = r.random_range(0..m_n);
        let interference = |class: UserClass, v: usize| {
            (0..k_n)
                .filter(|&kp| kp != k)
                .map(|kp| {
                    let g = chan.gain(class, kp, k, v, m);
                    (1.0 - frac(kp, m)) * rb_power(kp, m) * g + frac(kp, m) * urllc_p(kp, m) * g
                })
                .sum::<f64>()
        };
        let v = r.random_range(0..ve);
        let expected = powers[k].get(v, m) * chan.gain(UserClass::Embb, k, k, v, m) / (interference(UserClass::Embb, v) + noise);
        worst[3] = worst[3].max(rel(ctx.embb(k, v, m), expected));
        let v = r.random_range(0..vu);
        let expected = urllc_p(k, m) * chan.gain(UserClass::Urllc, k, k, v, m) / (interference(UserClass::Urllc, v) + noise);
        worst[4] = worst[4].max(rel(ctx.urllc(k, v, m), expected));
        sinr_cases += 1;
    }

    let elapsed = start.elapsed();
    let max = worst.iter().cloned().fold(0.0, f64::max);
    outcome(
        max <= 1e-10 && elapsed < Duration::from_secs(5),
        format!(
            "worst relative error embb {:.1e}, urllc {:.1e}, dispersion {:.1e}, sinr_e {:.1e}, sinr_u {:.1e} in {:.2} s",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            worst[4],
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_round_trip() -> Outcome {
    let cfg = SimConfig::default();
    let x = cfg.traffic.decode_error_target;
    let mut r = rng::stream(102, rng::tag::CHANNEL);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let chi = log_uniform(&mut r, 1.0, 1e4);
        let n = r.random_range(1..=cfg.num_minislots());
        let w = urllc_blocklength(n, &cfg).expect("blocklength");
        let rate = urllc_rb_rate(chi, n, x, &cfg).expect("rate");
        let bits_per_use = rate / (cfg.radio.rb_bandwidth * n as f64 / cfg.num_minislots() as f64);
        worst = worst.max(rel(decode_error_prob(chi, w, bits_per_use), x));
    }
    outcome(worst <= 1e-8, format!("1000 (chi, W) pairs, worst relative deviation {worst:.2e}"))
}

/// Allocation constraints checked straight from the decision's fields.
fn count_violations(d: &AllocationDecision, cfg: &SimConfig) -> usize {
    let (ve, vu, m_n, l_n) = (cfg.embb_users(), cfg.urllc_users(), cfg.num_rbs(), cfg.num_minislots());
    let mut bad = 0;
    let mut total = 0.0;
    for m in 0..m_n {
        if (0..ve).filter(|&v| d.assignment.get(v, m)).count() > 1 {
            bad += 1;
        }
        for l in 0..l_n {
            if (0..vu).filter(|&v| d.puncture.get(v, m, l)).count() > 1 {
                bad += 1;
            }
        }
        for v in 0..vu {
            if (0..l_n).filter(|&l| d.puncture.get(v, m, l)).count() > l_n {
                bad += 1;
            }
        }
        for v in 0..ve {
            let p = d.power.get(v, m);
            if !p.is_finite() || p < 0.0 || (p > 0.0 && !d.assignment.get(v, m)) {
                bad += 1;
            }
            total += p;
        }
    }
    if total > cfg.radio.p_max * (1.0 + 1e-12) {
        bad += 1;
    }
    bad
}

fn criterion_constraints() -> Outcome {
    let start = Instant::now();
    let mut r = rng::stream(103, rng::tag::EXPLORATION);
    let mut violations = 0;
    let mut decoded = 0;
    while decoded < 100_000 {
        let cfg = random_config(&mut r);
        let placement = orsched::channel::UserPlacement::random(&cfg, &mut r);
        let chan = orsched::channel::draw_channel(&placement, &cfg, 0, &mut r);
        let layout = ActionLayout::new(&cfg);
        for _ in 0..100 {
            let k = r.random_range(0..cfg.num_cells());
            let scale = [1.0, 10.0, 1e6][r.random_range(0..3)];
            let raw = RawAction((0..layout.len()).map(|_| scale * r.random_range(-1.0..=1.0)).collect());
            let demand = r.random_range(0..300);
            let link = LinkEstimate::nominal(&chan, &cfg, k);
            match decode_action(&raw, demand, &link, &cfg, k, 0, &DecodeOptions::default()) {
                Ok(d) => violations += count_violations(&d, &cfg),
                Err(_) => violations += 1,
            }
            decoded += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && elapsed < Duration::from_secs(30),
        format!("{decoded} decoded actions, {violations} violations in {:.1} s", elapsed.as_secs_f64()),
    )
}

fn criterion_oracle() -> Outcome {
    let start = Instant::now();
    let cfg = tiny_config();
    let mut r = rng::stream(104, rng::tag::PLACEMENT);
    let (mut ratio, mut exceeded, mut worst) = (0.0, 0, f64::INFINITY);
    for _ in 0..50 {
        let (chan, demand) = tiny_instance(&cfg, &mut r);
        let c = compare_with_oracle(&cfg, &chan, demand, 100_000, &mut r).expect("oracle comparison");
        exceeded += c.exceeded;
        ratio += c.ratio() / 50.0;
        worst = worst.min(c.ratio());
    }
    let elapsed = start.elapsed();
    outcome(
        ratio >= 0.9 && exceeded == 0 && elapsed < Duration::from_secs(300),
        format!(
            "50 instances, mean ratio {ratio:.4} (worst {worst:.4}), {exceeded} decodes above the oracle, {:.0} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_gradients() -> Outcome {
    let mut r = rng::stream(105, rng::tag::AGENT_INIT);
    let errors: Vec<f64> = (0..100).map(|_| gradient_check(&mut r)).collect();
    let failing = errors.iter().filter(|&&e| e > 1e-4).count();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    outcome(failing == 0, format!("100 nets, worst relative error {worst:.2e}, {failing} above 1e-4"))
}

fn criterion_harq() -> Outcome {
    let cfg = SimConfig::default();
    let mut r = rng::stream(106, rng::tag::HARQ);
    let (latencies, max_attempts) = harq_latency_census(1_000_000, 0.2, &cfg, &mut r);
    let mut seen: Vec<u64> = latencies.clone();
    seen.sort_unstable();
    seen.dedup();
    let ms: Vec<String> = seen.iter().map(|&s| format!("{:.3}", s as f64 * cfg.radio.minislot_duration * 1e3)).collect();
    let budget = cfg.latency_budget_check();
    outcome(
        seen == [5, 6] && max_attempts <= 2 && latencies.len() == 1_000_000 && budget.minislots == 6,
        format!(
            "{} blocks, latencies {:?} mini-slots ({} ms), at most {max_attempts} attempts",
            latencies.len(),
            seen,
            ms.join("/")
        ),
    )
}

fn criterion_dual() -> Outcome {
    let mut r = rng::stream(107, rng::tag::ARRIVALS);
    let mut mismatches = Vec::new();
    for i in 0..1000 {
        let phi0 = if i == 0 { 0.0 } else { log_uniform(&mut r, 1e-3, 1e3) };
        let target = log_uniform(&mut r, 1e-3, 0.5);
        let expected = (phi0 / target).ceil() as u64;
        let (mut phi, mut steps) = (phi0, 0u64);
        while phi > 0.0 {
            phi = update_dual_weight(phi, 0.0, target);
            steps += 1;
        }
        if steps != expected {
            mismatches.push(format!("phi0={phi0} target={target}: {steps} vs {expected}"));
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("1000 (phi0, target) pairs, {} mismatches {}", mismatches.len(), mismatches.join("; ")),
    )
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let ranks = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut out = vec![0.0; v.len()];
        for (rank, i) in idx.into_iter().enumerate() {
            out[i] = rank as f64;
        }
        out
    };
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

struct Trained {
    label: &'static str,
    cfg: SimConfig,
    agent: EnsembleAgent,
    policy: EvalPolicy,
    seconds: f64,
}

const LOADS: [f64; 4] = [20.0, 40.0, 80.0, 120.0];
const SWEEP_EPISODES: usize = 200;
const WINDOW_EPISODES: usize = 200;
const TRAIN_SEED: u64 = 2024;
const EVAL_SEED: u64 = 77;

fn train(label: &'static str, cfg: SimConfig, policy: EvalPolicy, out: &Path) -> Trained {
    let start = Instant::now();
    let (agent, summary) = run_training(&cfg, TRAIN_SEED, Some(out)).expect("training run");
    let seconds = start.elapsed().as_secs_f64();
    println!("  trained {label}: {} steps, {} updates in {seconds:.0} s", summary.steps, summary.updates);
    Trained { label, cfg, agent, policy, seconds }
}

fn criterion_load_trend(runs: &[Trained]) -> (Outcome, Vec<Vec<EvalReport>>) {
    let sweeps: Vec<Vec<EvalReport>> = runs
        .iter()
        .map(|t| {
            LOADS
                .iter()
                .map(|&phi| run_evaluation(&t.agent, &t.cfg, t.policy, phi, SWEEP_EPISODES, EVAL_SEED).expect("evaluation"))
                .collect()
        })
        .collect();
    let mut lines = Vec::new();
    for (t, sweep) in runs.iter().zip(&sweeps) {
        let rates: Vec<String> = sweep.iter().map(|r| format!("{:.3}", r.mean_embb_rate_bps / 1e6)).collect();
        let outages: Vec<String> = sweep.iter().map(|r| format!("{:.3}", r.mean_outage)).collect();
        lines.push(format!("{} eMBB Mbit/s [{}] outage [{}]", t.label, rates.join(", "), outages.join(", ")));
    }
    let rates: Vec<f64> = sweeps[0].iter().map(|r| r.mean_embb_rate_bps).collect();
    let rho = spearman(&LOADS, &rates);
    let dominated: Vec<String> = (1..runs.len())
        .flat_map(|b| {
            let sweeps = &sweeps;
            LOADS.iter().enumerate().filter_map(move |(i, phi)| {
                (sweeps[0][i].mean_embb_rate_bps < sweeps[b][i].mean_embb_rate_bps)
                    .then(|| format!("{} above at phi={phi}", runs[b].label))
            })
        })
        .collect();
    let fast = runs[0].seconds < 1800.0;
    let passed = rho < -0.9 && dominated.is_empty() && fast;
    let detail = format!(
        "Spearman {rho:.2}; {}; training {:.0} s; {}",
        if dominated.is_empty() { "ensemble at or above baselines everywhere".to_string() } else { dominated.join(", ") },
        runs[0].seconds,
        lines.join(" | ")
    );
    (outcome(passed, detail), sweeps)
}

fn criterion_windows(runs: &[Trained]) -> Outcome {
    let fractions: Vec<(String, f64, usize)> = runs
        .iter()
        .map(|t| {
            let r = run_evaluation(&t.agent, &t.cfg, t.policy, 80.0, WINDOW_EPISODES, EVAL_SEED + 1).expect("evaluation");
            (t.label.to_string(), r.fraction_windows_within, r.window_errors.len())
        })
        .collect();
    let ensemble = fractions[0].1;
    let beats = fractions[1..].iter().all(|f| ensemble > f.1);
    let detail: Vec<String> = fractions.iter().map(|(l, f, n)| format!("{l} {:.3} of {n} windows", f)).collect();
    outcome(ensemble > 0.9 && beats, format!("phi=80: {}", detail.join(", ")))
}

fn criterion_determinism(first: &Path, second: &Path) -> Outcome {
    let files = ["metrics.csv", "checkpoint.bin"];
    let mut same = Vec::new();
    for f in files {
        let a = std::fs::read(first.join(f)).unwrap_or_default();
        let b = std::fs::read(second.join(f)).unwrap_or_default();
        same.push(!a.is_empty() && a == b);
    }
    outcome(
        same.iter().all(|&s| s),
        format!("metrics.csv identical: {}, checkpoint.bin identical: {}", same[0], same[1]),
    )
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ORSCHED_ACCEPT_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |n: usize| only.as_ref().is_none_or(|o| o.contains(&n));
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, name: &'static str, o: Outcome| {
        println!("{} [{n}] {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    if wanted(1) {
        report(1, "formula fidelity", criterion_formulas());
    }
    if wanted(2) {
        report(2, "inverse consistency", criterion_round_trip());
    }
    if wanted(3) {
        report(3, "constraint safety", criterion_constraints());
    }
    if wanted(4) {
        report(4, "oracle gap", criterion_oracle());
    }
    if wanted(5) {
        report(5, "gradient correctness", criterion_gradients());
    }
    if wanted(6) {
        report(6, "HARQ timing", criterion_harq());
    }
    if wanted(7) {
        report(7, "dual-weight dynamics", criterion_dual());
    }
    if wanted(8) || wanted(9) || wanted(10) {
        let dir = tempfile::tempdir().expect("tempdir");
        let cfg = desk_config();
        let runs = vec![
            train("thompson", cfg.clone(), EvalPolicy::Thompson, &dir.path().join("thompson")),
            train("eps:0.1", epsilon_baseline(&cfg, 0.1), EvalPolicy::Epsilon(0.1), &dir.path().join("eps01")),
            train("eps:0.3", epsilon_baseline(&cfg, 0.3), EvalPolicy::Epsilon(0.3), &dir.path().join("eps03")),
        ];
        if wanted(8) {
            report(8, "load trend", criterion_load_trend(&runs).0);
        }
        if wanted(9) {
            report(9, "error-window trend", criterion_windows(&runs));
        }
        if wanted(10) {
            let again = dir.path().join("thompson_again");
            run_training(&cfg, TRAIN_SEED, Some(&again)).expect("training run");
            report(10, "determinism", criterion_determinism(&dir.path().join("thompson"), &again));
        }
    }

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
