//! Outage-limited power minimisation with repetition-time-diversity HARQ.
//!
//! A packet is one codeword of rate `R` sent for up to `M` rounds. Round `m`
//! uses power `P_m` and occupies one fading block; the receiver combines all
//! copies (MRC), so after round `m` the effective SNR is `Σ_{n≤m} g(n)·P_n`
//! and the packet decodes once `ln(1 + Σ g(n)P_n) ≥ R`. A packet still
//! undecoded after round `M` is an outage.
//!
//! Average power is total transmitted energy over total slots (codeword
//! length normalised to one slot per round).
//!
//! Static policies fix `P_1..P_M`; the reinforcement controller scales one
//! running power down by `(1 - d_m)` on an ACK in round `m` and up by
//! `(1 + d'_m)` on a NACK.

use serde::{Deserialize, Serialize};

use crate::channel::{gain_cdf, log_joint_gain_pdf, FadingParams, GaussMarkovChannel};
use crate::engine::{point_seed, wilson_interval, BatchMeans, DEFAULT_BATCHES, Z95};
use crate::error::{Error, Result};
use crate::numerics::{bisect, grid_search, linear_to_db, quadrature_2d, Goal, SearchGrid, Spacing};

pub const DEFAULT_POWER_FLOOR: f64 = 1e-6;
pub const DEFAULT_POWER_CAP: f64 = 1e6;

/// Packets used when stop/outage probabilities need Monte Carlo (M > 2).
pub const DEFAULT_MC_PACKETS: usize = 200_000;

const QUAD_TOL: f64 = 1e-11;
// Exp(1) mass beyond this is below 1e-30.
const GAIN_TAIL: f64 = 70.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarqConfig {
    rate: f64,
    max_rounds: usize,
    outage_target: f64,
}

impl HarqConfig {
    pub fn new(rate: f64, max_rounds: usize, outage_target: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::invalid("rate", rate, "codeword rate must be positive"));
        }
        if max_rounds == 0 {
            return Err(Error::invalid("max_rounds", 0.0, "need at least one round"));
        }
        if !(outage_target > 0.0 && outage_target < 1.0) {
            return Err(Error::invalid("outage_target", outage_target, "must lie in (0, 1)"));
        }
        Ok(HarqConfig {
            rate,
            max_rounds,
            outage_target,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn max_rounds(&self) -> usize {
        self.max_rounds
    }

    pub fn outage_target(&self) -> f64 {
        self.outage_target
    }

    pub fn with_outage_target(self, outage_target: f64) -> Result<Self> {
        HarqConfig::new(self.rate, self.max_rounds, outage_target)
    }

    /// Combined SNR needed to decode, `e^R - 1`.
    pub fn snr_threshold(&self) -> f64 {
        self.rate.exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticPowerPolicy {
    powers: Vec<f64>,
}

impl StaticPowerPolicy {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::invalid("powers", 0.0, "need one power per round"));
        }
        if let Some(&p) = powers.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::invalid("powers", p, "round powers must be positive and finite"));
        }
        Ok(StaticPowerPolicy { powers })
    }

    pub fn uniform(power: f64, rounds: usize) -> Result<Self> {
        StaticPowerPolicy::new(vec![power; rounds])
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn rounds(&self) -> usize {
        self.powers.len()
    }

    fn check_against(&self, config: &HarqConfig) -> Result<()> {
        if self.powers.len() != config.max_rounds {
            return Err(Error::invalid(
                "powers",
                self.powers.len() as f64,
                "policy length must equal max_rounds",
            ));
        }
        Ok(())
    }
}

/// Decodability test at the end of a round. Only the current accumulated
/// SNR matters; sequencing in [`HarqChainState`] supplies "and not before".
pub fn packet_decodes_at(_round: usize, accumulated_snr_prev: f64, accumulated_snr_now: f64, rate: f64) -> bool {
    debug_assert!(accumulated_snr_prev <= accumulated_snr_now);
    accumulated_snr_now.ln_1p() >= rate
}

/// Within-packet state: round index (1-based), MRC sum and energy so far.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HarqChainState {
    round: usize,
    accumulated_snr: f64,
    energy_spent: f64,
}

impl HarqChainState {
    pub fn new() -> Self {
        HarqChainState::default()
    }

    /// Rounds already transmitted.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn accumulated_snr(&self) -> f64 {
        self.accumulated_snr
    }

    pub fn energy_spent(&self) -> f64 {
        self.energy_spent
    }

    /// Send the next round; returns whether the packet now decodes.
    pub fn transmit(&mut self, gain: f64, power: f64, rate: f64) -> bool {
        let prev = self.accumulated_snr;
        self.round += 1;
        self.accumulated_snr += gain * power;
        self.energy_spent += power;
        packet_decodes_at(self.round, prev, self.accumulated_snr, rate)
    }
}

/// Result of pushing a NACK through the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureAction {
    Retransmit { next_round: usize },
    Outage,
}

/// Reinforcement power controller state.
///
/// `d[m]` and `d_up[m]` are the down/up coefficients for round `m + 1`.
/// Zero coefficients are accepted so the degenerate (fixed-power)
/// controller is representable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerController {
    power: f64,
    d: Vec<f64>,
    d_up: Vec<f64>,
    power_floor: f64,
    power_cap: f64,
}

impl PowerController {
    pub fn new(initial_power: f64, d: Vec<f64>, d_up: Vec<f64>) -> Result<Self> {
        Self::with_bounds(initial_power, d, d_up, DEFAULT_POWER_FLOOR, DEFAULT_POWER_CAP)
    }

    pub fn with_bounds(
        initial_power: f64,
        d: Vec<f64>,
        d_up: Vec<f64>,
        power_floor: f64,
        power_cap: f64,
    ) -> Result<Self> {
        if d.is_empty() || d.len() != d_up.len() {
            return Err(Error::invalid("d", d.len() as f64, "need one d and one d' per round"));
        }
        if let Some(&v) = d.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return Err(Error::invalid("d", v, "decrease coefficients must lie in [0, 1)"));
        }
        if let Some(&v) = d_up.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("d_up", v, "increase coefficients must be non-negative"));
        }
        if !(power_floor > 0.0 && power_floor < power_cap) || !power_cap.is_finite() {
            return Err(Error::invalid("power_floor", power_floor, "need 0 < floor < cap < inf"));
        }
        if !(initial_power > 0.0) || !initial_power.is_finite() {
            return Err(Error::invalid("initial_power", initial_power, "must be positive"));
        }
        Ok(PowerController {
            power: initial_power.clamp(power_floor, power_cap),
            d,
            d_up,
            power_floor,
            power_cap,
        })
    }

    /// Fixed power: every coefficient zero.
    pub fn degenerate(power: f64, rounds: usize) -> Result<Self> {
        PowerController::new(power, vec![0.0; rounds], vec![0.0; rounds])
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn rounds(&self) -> usize {
        self.d.len()
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn d_up(&self) -> &[f64] {
        &self.d_up
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.power_floor, self.power_cap)
    }

    fn clamp(&mut self) {
        self.power = self.power.clamp(self.power_floor, self.power_cap);
    }

    /// ACK in round `m` (1-based): `P ← (1 - d_m) P`; the next packet starts.
    pub fn on_decode(&mut self, round: usize) {
        self.power *= 1.0 - self.d[round - 1];
        self.clamp();
    }

    /// NACK in round `m`: `P ← (1 + d'_m) P`; retransmit, or outage at `m = M`.
    pub fn on_failure(&mut self, round: usize) -> FailureAction {
        self.power *= 1.0 + self.d_up[round - 1];
        self.clamp();
        if round < self.rounds() {
            FailureAction::Retransmit { next_round: round + 1 }
        } else {
            FailureAction::Outage
        }
    }
}

/// How consecutive packets share the fading trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacketStart {
    /// One continuous trajectory: the next packet's first round sees the
    /// block after the previous packet's last round.
    #[default]
    Continuous,
    /// Every packet starts from a fresh stationary draw; rounds within a
    /// packet stay β-correlated. This is the model behind the stop and
    /// outage probability formulas.
    Independent,
}

impl std::str::FromStr for PacketStart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(PacketStart::Continuous),
            "independent" => Ok(PacketStart::Independent),
            other => Err(Error::Config(format!("unknown packet start mode `{other}`"))),
        }
    }
}

/// Monte Carlo summary of a HARQ run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarqSimResult {
    /// Total energy / total slots (linear).
    pub avg_power: f64,
    pub avg_power_db: f64,
    pub avg_power_ci: f64,
    /// Mean over packets of that packet's energy per slot.
    pub per_packet_power: f64,
    pub outage_prob: f64,
    /// 95% Wilson interval of the outage probability.
    pub outage_interval: (f64, f64),
    pub outage_ci: f64,
    pub packets: usize,
    pub slots: u64,
    pub outages: u64,
    /// Empirical `Pr(A_m)`: the packet's last round was `m`.
    pub stop_histogram: Vec<f64>,
    pub stop_counts: Vec<u64>,
    pub total_energy: f64,
}

impl HarqSimResult {
    /// Halfwidth of the average power interval in dB.
    pub fn avg_power_ci_db(&self) -> f64 {
        10.0 / std::f64::consts::LN_10 * self.avg_power_ci / self.avg_power
    }
}

/// Per-packet trace record of [`HarqSession`].
#[derive(Debug, Clone, PartialEq)]
pub struct PacketTrace {
    pub powers: Vec<f64>,
    pub gains: Vec<f64>,
    pub accumulated_snr: Vec<f64>,
    pub decoded_round: Option<usize>,
}

impl PacketTrace {
    pub fn rounds(&self) -> usize {
        self.powers.len()
    }

    pub fn outage(&self) -> bool {
        self.decoded_round.is_none()
    }
}

/// Where per-round powers come from.
trait PowerSource {
    fn power(&self, round: usize) -> f64;
    fn decoded(&mut self, round: usize);
    fn failed(&mut self, round: usize);
}

impl PowerSource for &StaticPowerPolicy {
    fn power(&self, round: usize) -> f64 {
        self.powers[round - 1]
    }
    fn decoded(&mut self, _: usize) {}
    fn failed(&mut self, _: usize) {}
}

impl PowerSource for PowerController {
    fn power(&self, _: usize) -> f64 {
        self.power
    }
    fn decoded(&mut self, round: usize) {
        self.on_decode(round);
    }
    fn failed(&mut self, round: usize) {
        self.on_failure(round);
    }
}

fn run_packet<S: PowerSource>(
    channel: &mut GaussMarkovChannel,
    config: &HarqConfig,
    source: &mut S,
    mut trace: Option<&mut PacketTrace>,
) -> (HarqChainState, Option<usize>) {
    let mut chain = HarqChainState::new();
    for m in 1..=config.max_rounds {
        let p = source.power(m);
        let g = channel.next_gain();
        let decoded = chain.transmit(g, p, config.rate);
        if let Some(t) = trace.as_deref_mut() {
            t.powers.push(p);
            t.gains.push(g);
            t.accumulated_snr.push(chain.accumulated_snr);
        }
        if decoded {
            source.decoded(m);
            return (chain, Some(m));
        }
        source.failed(m);
    }
    (chain, None)
}

fn simulate<S: PowerSource>(
    params: FadingParams,
    config: &HarqConfig,
    source: &mut S,
    packets: usize,
    start: PacketStart,
) -> Result<HarqSimResult> {
    if packets == 0 {
        return Err(Error::invalid("packets", 0.0, "need at least one packet"));
    }
    let mut channel = GaussMarkovChannel::new(params);
    let rounds = config.max_rounds;
    let mut stop_counts = vec![0u64; rounds];
    let mut outages = 0u64;
    let mut per_packet_sum = 0.0;
    let mut acc = BatchMeans::new(packets, DEFAULT_BATCHES);
    for k in 0..packets {
        if start == PacketStart::Independent && k > 0 {
            channel.restart();
        }
        let (chain, decoded) = run_packet(&mut channel, config, source, None);
        if decoded.is_none() {
            outages += 1;
        }
        stop_counts[chain.round - 1] += 1;
        per_packet_sum += chain.energy_spent / chain.round as f64;
        acc.push(chain.energy_spent, chain.round as f64);
    }
    let est = acc.estimate();
    let (lo, hi) = wilson_interval(outages, packets as u64, Z95);
    Ok(HarqSimResult {
        avg_power: est.mean,
        avg_power_db: linear_to_db(est.mean),
        avg_power_ci: est.halfwidth_95,
        per_packet_power: per_packet_sum / packets as f64,
        outage_prob: outages as f64 / packets as f64,
        outage_interval: (lo, hi),
        outage_ci: 0.5 * (hi - lo),
        packets,
        slots: acc.total_den() as u64,
        outages,
        stop_histogram: stop_counts.iter().map(|&c| c as f64 / packets as f64).collect(),
        stop_counts,
        total_energy: acc.total_num(),
    })
}

/// Static-power RTD HARQ over one continuous fading trace.
pub fn simulate_harq_static(
    params: FadingParams,
    config: &HarqConfig,
    policy: &StaticPowerPolicy,
    packets: usize,
) -> Result<HarqSimResult> {
    simulate_harq_static_with(params, config, policy, packets, PacketStart::Continuous)
}

pub fn simulate_harq_static_with(
    params: FadingParams,
    config: &HarqConfig,
    policy: &StaticPowerPolicy,
    packets: usize,
    start: PacketStart,
) -> Result<HarqSimResult> {
    policy.check_against(config)?;
    simulate(params, config, &mut &*policy, packets, start)
}

/// Reinforcement power control over one continuous fading trace.
pub fn simulate_alg2(
    params: FadingParams,
    config: &HarqConfig,
    controller: &PowerController,
    packets: usize,
) -> Result<HarqSimResult> {
    if controller.rounds() != config.max_rounds {
        return Err(Error::invalid("d", controller.rounds() as f64, "coefficients must match max_rounds"));
    }
    let mut c = controller.clone();
    simulate(params, config, &mut c, packets, PacketStart::Continuous)
}

/// Packet-by-packet driver recording every round, for trace inspection.
pub struct HarqSession {
    channel: GaussMarkovChannel,
    config: HarqConfig,
    source: SessionSource,
}

enum SessionSource {
    Static(StaticPowerPolicy),
    Controller(PowerController),
}

impl HarqSession {
    pub fn with_policy(params: FadingParams, config: HarqConfig, policy: StaticPowerPolicy) -> Result<Self> {
        policy.check_against(&config)?;
        Ok(HarqSession {
            channel: GaussMarkovChannel::new(params),
            config,
            source: SessionSource::Static(policy),
        })
    }

    pub fn with_controller(params: FadingParams, config: HarqConfig, controller: PowerController) -> Result<Self> {
        if controller.rounds() != config.max_rounds {
            return Err(Error::invalid("d", controller.rounds() as f64, "coefficients must match max_rounds"));
        }
        Ok(HarqSession {
            channel: GaussMarkovChannel::new(params),
            config,
            source: SessionSource::Controller(controller),
        })
    }

    pub fn controller(&self) -> Option<&PowerController> {
        match &self.source {
            SessionSource::Controller(c) => Some(c),
            SessionSource::Static(_) => None,
        }
    }

    pub fn next_packet(&mut self) -> PacketTrace {
        let mut trace = PacketTrace {
            powers: Vec::new(),
            gains: Vec::new(),
            accumulated_snr: Vec::new(),
            decoded_round: None,
        };
        let decoded = match &mut self.source {
            SessionSource::Static(p) => run_packet(&mut self.channel, &self.config, &mut &*p, Some(&mut trace)).1,
            SessionSource::Controller(c) => run_packet(&mut self.channel, &self.config, c, Some(&mut trace)).1,
        };
        trace.decoded_round = decoded;
        trace
    }
}

impl Iterator for HarqSession {
    type Item = PacketTrace;

    fn next(&mut self) -> Option<PacketTrace> {
        Some(self.next_packet())
    }
}

/// Long-run average power implied by stop probabilities:
/// `Σ_m Pr(A_m) Σ_{n≤m} P_n / Σ_m m·Pr(A_m)`.
pub fn average_power(policy: &StaticPowerPolicy, stop_probs: &[f64]) -> f64 {
    let mut energy = 0.0;
    let mut slots = 0.0;
    let mut cumulative = 0.0;
    for (m, (&p, &pr)) in policy.powers.iter().zip(stop_probs).enumerate() {
        cumulative += p;
        energy += pr * cumulative;
        slots += pr * (m + 1) as f64;
    }
    energy / slots
}

/// Per-packet average `Σ_m Pr(A_m) · (1/m) Σ_{n≤m} P_n`.
pub fn per_packet_average_power(policy: &StaticPowerPolicy, stop_probs: &[f64]) -> f64 {
    let mut cumulative = 0.0;
    policy
        .powers
        .iter()
        .zip(stop_probs)
        .enumerate()
        .map(|(m, (&p, &pr))| {
            cumulative += p;
            pr * cumulative / (m + 1) as f64
        })
        .sum()
}

/// Probability that rounds `1..=k` all fail (the MRC sum stays below
/// `e^R - 1`), for `k ≤ 2`, by quadrature over the gain densities.
fn prob_fail_through(params: FadingParams, config: &HarqConfig, powers: &[f64], k: usize) -> Result<f64> {
    let t = config.snr_threshold();
    match k {
        0 => Ok(1.0),
        1 => gain_cdf(t / powers[0]),
        2 => {
            let (p1, p2) = (powers[0], powers[1]);
            let beta = params.beta();
            if beta == 1.0 {
                // identical gains: g (P1 + P2) < t
                return gain_cdf(t / (p1 + p2));
            }
            quadrature_2d(
                |x, y| log_joint_gain_pdf(x, y, beta).map_or(0.0, f64::exp),
                0.0,
                (t / p1).min(GAIN_TAIL),
                |_| 0.0,
                |x| ((t - x * p1) / p2).clamp(0.0, GAIN_TAIL),
                QUAD_TOL,
            )
        }
        _ => unreachable!("quadrature route only covers two rounds"),
    }
}

/// `Pr(A_m)` for `m = 1..M`, each packet starting from the stationary law.
/// Quadrature for `M ≤ 2`, Monte Carlo ([`DEFAULT_MC_PACKETS`] independent
/// packets, seed from `params`) beyond.
pub fn stop_probabilities(params: FadingParams, config: &HarqConfig, policy: &StaticPowerPolicy) -> Result<Vec<f64>> {
    policy.check_against(config)?;
    let m = config.max_rounds;
    if m > 2 {
        return Ok(simulate_harq_static_with(params, config, policy, DEFAULT_MC_PACKETS, PacketStart::Independent)?.stop_histogram);
    }
    // A_m for m < M: fail through m-1, succeed at m; A_M: fail through M-1.
    let fail: Vec<f64> = (0..m)
        .map(|k| prob_fail_through(params, config, policy.powers(), k))
        .collect::<Result<_>>()?;
    let mut probs: Vec<f64> = (0..m - 1).map(|k| fail[k] - fail[k + 1]).collect();
    probs.push(fail[m - 1]);
    Ok(probs)
}

/// `Pr(ln(1 + Σ_{n≤M} g(n) P_n) < R)`. Quadrature for `M ≤ 2`, Monte Carlo beyond.
pub fn outage_probability(params: FadingParams, config: &HarqConfig, policy: &StaticPowerPolicy) -> Result<f64> {
    policy.check_against(config)?;
    if config.max_rounds > 2 {
        return Ok(simulate_harq_static_with(params, config, policy, DEFAULT_MC_PACKETS, PacketStart::Independent)?.outage_prob);
    }
    prob_fail_through(params, config, policy.powers(), config.max_rounds)
}

/// Search space for [`optimize_static_powers`]: the grid covers `P_1..P_{M-1}`
/// (linear power); `P_M` is solved from the outage constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticPowerSearch {
    /// `None`: log grid spanning −20…+10 dB around the uniform solution.
    pub grid: Option<SearchGrid>,
    pub power_floor: f64,
    pub power_cap: f64,
    /// Packets per Monte Carlo evaluation when `M > 2`.
    pub mc_packets: usize,
}

impl Default for StaticPowerSearch {
    fn default() -> Self {
        StaticPowerSearch {
            grid: None,
            power_floor: DEFAULT_POWER_FLOOR,
            power_cap: DEFAULT_POWER_CAP,
            mc_packets: DEFAULT_MC_PACKETS,
        }
    }
}

struct OutageModel<'a> {
    params: FadingParams,
    config: &'a HarqConfig,
    mc_packets: usize,
}

impl OutageModel<'_> {
    fn outage(&self, policy: &StaticPowerPolicy) -> Result<f64> {
        if self.config.max_rounds <= 2 {
            outage_probability(self.params, self.config, policy)
        } else {
            Ok(simulate_harq_static_with(self.params, self.config, policy, self.mc_packets, PacketStart::Independent)?.outage_prob)
        }
    }

    fn average_power(&self, policy: &StaticPowerPolicy) -> Result<f64> {
        let stops = if self.config.max_rounds <= 2 {
            stop_probabilities(self.params, self.config, policy)?
        } else {
            simulate_harq_static_with(self.params, self.config, policy, self.mc_packets, PacketStart::Independent)?.stop_histogram
        };
        Ok(average_power(policy, &stops))
    }

    /// Last-round power meeting the outage target given the others, by
    /// bisection in log power (outage is nonincreasing in `P_M`).
    fn solve_last(&self, head: &[f64], floor: f64, cap: f64) -> Result<Option<f64>> {
        let target = self.config.outage_target;
        let eval = |log_p: f64| -> f64 {
            let mut powers = head.to_vec();
            powers.push(log_p.exp());
            match StaticPowerPolicy::new(powers).and_then(|p| self.outage(&p)) {
                Ok(o) => o - target,
                Err(_) => f64::NAN,
            }
        };
        let (lo, hi) = (floor.ln(), cap.ln());
        let at_cap = eval(hi);
        if at_cap > 0.0 {
            return Ok(None);
        }
        if eval(lo) <= 0.0 {
            return Ok(Some(floor));
        }
        // MC outage is a step function; bisect to the feasible side of the step
        let root = bisect(eval, lo, hi, 1e-10)?;
        let mut p = root.exp();
        if eval(p.ln()) > 0.0 {
            p *= 1.0 + 1e-9;
        }
        Ok(Some(p))
    }
}

/// Uniform power `P_1 = … = P_M` meeting the outage target.
pub fn uniform_power_for_outage(params: FadingParams, config: &HarqConfig) -> Result<f64> {
    uniform_power_with(params, config, &StaticPowerSearch::default())
}

fn uniform_power_with(params: FadingParams, config: &HarqConfig, search: &StaticPowerSearch) -> Result<f64> {
    let model = OutageModel {
        params,
        config,
        mc_packets: search.mc_packets,
    };
    let m = config.max_rounds;
    let f = |log_p: f64| {
        StaticPowerPolicy::uniform(log_p.exp(), m)
            .and_then(|p| model.outage(&p))
            .map_or(f64::NAN, |o| o - config.outage_target)
    };
    let (lo, hi) = (search.power_floor.ln(), search.power_cap.ln());
    if f(hi) > 0.0 {
        return Err(Error::Infeasible(format!(
            "outage {} unreachable with uniform power up to {}",
            config.outage_target, search.power_cap
        )));
    }
    Ok(bisect(f, lo, hi, 1e-10)?.exp())
}

/// Minimum-average-power static policy subject to outage = ε.
pub fn optimize_static_powers(
    params: FadingParams,
    config: &HarqConfig,
    search: &StaticPowerSearch,
) -> Result<StaticPowerPolicy> {
    let model = OutageModel {
        params,
        config,
        mc_packets: search.mc_packets,
    };
    let m = config.max_rounds;
    let reference = uniform_power_with(params, config, search)?;
    if m == 1 {
        return StaticPowerPolicy::new(vec![reference]);
    }
    let grid = match search.grid {
        Some(g) => g,
        None => SearchGrid {
            lower: (reference * 1e-2).max(search.power_floor),
            upper: (reference * 10.0).min(search.power_cap),
            points: 31,
            refinement_rounds: 3,
            spacing: Spacing::Log,
        },
    };
    let grids = vec![grid; m - 1];
    let out = grid_search(&grids, Goal::Minimize, |head| {
        let last = model.solve_last(head, search.power_floor, search.power_cap).ok()??;
        let mut powers = head.to_vec();
        powers.push(last);
        let policy = StaticPowerPolicy::new(powers).ok()?;
        model.average_power(&policy).ok()
    })
    .map_err(|e| match e {
        Error::NoFeasiblePoint => Error::Infeasible(format!(
            "outage {} unreachable within power cap {}",
            config.outage_target, search.power_cap
        )),
        other => other,
    })?;
    let last = model
        .solve_last(&out.point, search.power_floor, search.power_cap)?
        .ok_or_else(|| Error::Infeasible("winning point lost feasibility".into()))?;
    let mut powers = out.point;
    powers.push(last);
    StaticPowerPolicy::new(powers)
}

/// Search space and run lengths for [`tune_alg2`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alg2Tuning {
    /// Grid for each `d_m`.
    pub d_grid: SearchGrid,
    /// Grid for each `d'_m`.
    pub d_up_grid: SearchGrid,
    /// Initial power as a multiple of the uniform solution.
    pub initial_power_span: SearchGrid,
    /// Multipliers applied to the searched `d'` vector to form extra,
    /// more conservative candidates.
    pub d_up_backoff: Vec<f64>,
    pub search_packets: usize,
    pub validation_packets: usize,
    pub power_floor: f64,
    pub power_cap: f64,
}

impl Default for Alg2Tuning {
    fn default() -> Self {
        Alg2Tuning {
            d_grid: SearchGrid {
                lower: 1e-4,
                upper: 0.9,
                points: 10,
                refinement_rounds: 1,
                spacing: Spacing::Log,
            },
            d_up_grid: SearchGrid {
                lower: 1e-3,
                upper: 10.0,
                points: 10,
                refinement_rounds: 1,
                spacing: Spacing::Log,
            },
            initial_power_span: SearchGrid {
                lower: 0.1,
                upper: 10.0,
                points: 25,
                refinement_rounds: 0,
                spacing: Spacing::Log,
            },
            d_up_backoff: vec![1.03, 1.06, 1.1, 1.15, 1.2, 1.3, 1.4, 1.6, 1.8, 2.0],
            search_packets: 100_000,
            validation_packets: 1_000_000,
            power_floor: DEFAULT_POWER_FLOOR,
            power_cap: DEFAULT_POWER_CAP,
        }
    }
}

/// Outcome of [`tune_alg2`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alg2TuneOutcome {
    pub controller: PowerController,
    pub validation: HarqSimResult,
    /// Uniform power the initial-power grid is centred on.
    pub reference_power: f64,
    /// Best controller with nonzero coefficients and its search-run average power.
    pub adaptive_best: Option<(PowerController, f64)>,
    /// Candidates that failed validation before the winner.
    pub rejected: usize,
}

/// Exhaustive search for the reinforcement controller.
///
/// 1. With `P_initial` at the uniform solution, grid-search all `2M`
///    coefficients for minimum average power subject to
///    `outage ≤ ε + 2·CI` (common random numbers across candidates).
/// 2. For the winning coefficients and for the fixed-power controller (all
///    coefficients zero), scan `P_initial`; also try the winner with `d'`
///    scaled up by each backoff factor.
/// 3. Re-run candidates in order of search power on a fresh seed for
///    `validation_packets`; the first with `outage ≤ ε + 3·CI` wins.
pub fn tune_alg2(params: FadingParams, config: &HarqConfig, tuning: &Alg2Tuning) -> Result<Alg2TuneOutcome> {
    let m = config.max_rounds;
    let eps = config.outage_target;
    let search = StaticPowerSearch {
        power_floor: tuning.power_floor,
        power_cap: tuning.power_cap,
        ..StaticPowerSearch::default()
    };
    let reference = uniform_power_with(params, config, &search)?;
    let build = |p0: f64, coeffs: &[f64]| {
        PowerController::with_bounds(
            p0,
            coeffs[..m].to_vec(),
            coeffs[m..].to_vec(),
            tuning.power_floor,
            tuning.power_cap,
        )
    };
    let score = |controller: &PowerController| -> Option<f64> {
        let r = simulate_alg2(params, config, controller, tuning.search_packets).ok()?;
        (r.outage_prob <= eps + 2.0 * r.outage_ci).then_some(r.avg_power)
    };

    let mut grids = vec![tuning.d_grid; m];
    grids.extend(std::iter::repeat_n(tuning.d_up_grid, m));
    let adaptive = match grid_search(&grids, Goal::Minimize, |x| build(reference, x).ok().and_then(|c| score(&c))) {
        Ok(out) => Some(out),
        Err(Error::NoFeasiblePoint) => None,
        Err(e) => return Err(e),
    };

    let zero = vec![0.0; 2 * m];
    let multipliers = tuning.initial_power_span.values();
    let mut trials: Vec<PowerController> = multipliers.iter().filter_map(|&k| build(reference * k, &zero).ok()).collect();
    if let Some(out) = &adaptive {
        for &k in &multipliers {
            trials.extend(build(reference * k, &out.point));
        }
        for &kappa in &tuning.d_up_backoff {
            let mut coeffs = out.point.clone();
            coeffs[m..].iter_mut().for_each(|v| *v *= kappa);
            trials.extend(build(reference, &coeffs));
        }
    }
    let mut candidates: Vec<(f64, PowerController)> =
        trials.into_iter().filter_map(|c| score(&c).map(|p| (p, c))).collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    let fresh = params.with_seed(point_seed(params.seed(), 2));
    for (rejected, (_, controller)) in candidates.into_iter().enumerate() {
        let validation = simulate_alg2(fresh, config, &controller, tuning.validation_packets)?;
        if validation.outage_prob <= eps + 3.0 * validation.outage_ci {
            let adaptive_best = match adaptive {
                Some(out) => Some((build(reference, &out.point)?, out.value)),
                None => None,
            };
            return Ok(Alg2TuneOutcome {
                controller,
                validation,
                reference_power: reference,
                adaptive_best,
                rejected,
            });
        }
    }
    Err(Error::Infeasible(format!("no controller validated at outage {eps}")))
}
