//! Episodic decision environment.
//!
//! Each episode drops users uniformly in a square around the base station,
//! draws per-episode shadowing, and evolves fast fading every step. The
//! agent emits one unconstrained 4-tuple of logits per user; the environment
//! squashes them into a feasible allocation (range constraints via sigmoid,
//! the bandwidth sum cap via softmax over selected users), prices the
//! resulting transmission, evaluates the phase's distortion bound, and pays
//! `-energy_scaled - lambda * penalty`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{achievable_rate, channel_gain, GainModel, LinkAllocation, RadioConstants};
use crate::compression::CompressionTable;
use crate::distortion::{
    inference_gap_bound, pool_users, training_gap_per_round, AiTaskConstants, DistortionBudget,
};
use crate::error::{invalid, Error, Result};

/// Which task the distortion-resilience constraint protects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Training,
    Inference,
}

/// Fully resolved scenario, all values in linear SI units.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub user_count: usize,
    pub region_side_km: f64,
    pub gain_model: GainModel,
    pub radio: RadioConstants,
    /// Uncompressed per-round payload, bits.
    pub payload_bits: f64,
    pub table: CompressionTable,
    pub ai: AiTaskConstants,
    pub epsilon_learn: f64,
    pub epsilon_inf: f64,
    /// Channel-model distortion variance per user.
    pub model_variance: f64,
    /// Data-sampling distortion variance per user.
    pub data_variance: f64,
    /// When set, the channel-model variance is the inverse received SNR of
    /// the link instead of the constant above.
    pub model_variance_from_snr: bool,
    /// Weight of the resilience penalty in the reward.
    pub lambda: f64,
    /// Rate used to scale raw joules into reward units; the scale is
    /// `P_max * Z / reference_rate`.
    pub reference_rate_bps: f64,
    /// Penalty charged when a step delivers no usable data (empty selection
    /// or a selected link with zero rate).
    pub violation_penalty: f64,
    /// Force every user selected, removing the selection bit from the
    /// action's effect.
    pub mandatory_selection: bool,
    /// Data counts weighting the pooled variance; length `user_count`.
    pub user_data_counts: Vec<u64>,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.user_count == 0 {
            return Err(invalid("user_count", "must be positive"));
        }
        if !(self.region_side_km > 0.0) {
            return Err(invalid("region_side_km", "must be positive"));
        }
        self.radio.validate()?;
        if !(self.payload_bits > 0.0) {
            return Err(invalid("payload_bits", "must be positive"));
        }
        if !(self.epsilon_learn > 0.0) {
            return Err(invalid("epsilon_learn", "must be positive"));
        }
        if !(self.epsilon_inf > 0.0) {
            return Err(invalid("epsilon_inf", "must be positive"));
        }
        if self.model_variance < 0.0 || self.data_variance < 0.0 {
            return Err(invalid("model_variance/data_variance", "must be >= 0"));
        }
        if !(self.lambda >= 0.0) {
            return Err(invalid("lambda", "must be >= 0"));
        }
        if !(self.reference_rate_bps > 0.0) {
            return Err(invalid("reference_rate_bps", "must be positive"));
        }
        if !(self.violation_penalty >= 0.0) {
            return Err(invalid("violation_penalty", "must be >= 0"));
        }
        if self.user_data_counts.len() != self.user_count {
            return Err(Error::ShapeMismatch {
                context: "user_data_counts",
                expected: self.user_count,
                got: self.user_data_counts.len(),
            });
        }
        if self.user_data_counts.iter().any(|&d| d == 0) {
            return Err(invalid("user_data_counts", "entries must be positive"));
        }
        Ok(())
    }

    /// Joules-to-reward-units divisor.
    pub fn energy_scale_j(&self) -> f64 {
        self.radio.power_cap_pmax * self.payload_bits / self.reference_rate_bps
    }

    /// Smallest compression ratio the action space can express.
    pub fn min_o(&self) -> f64 {
        self.table.min_o()
    }
}

/// Observation handed to the policy: one channel gain per user.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub gains: Vec<f64>,
    pub timestep: usize,
}

/// Unconstrained per-user logits as produced by the actor, before squashing.
/// Component order: selection, power, compression, bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAction {
    pub per_user: Vec<[f64; 4]>,
}

impl RawAction {
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() % 4 != 0 || flat.is_empty() {
            return Err(Error::ShapeMismatch {
                context: "RawAction::from_flat",
                expected: 4,
                got: flat.len(),
            });
        }
        Ok(Self {
            per_user: flat.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.per_user.iter().flatten().copied().collect()
    }
}

/// One user's feasible allocation after squashing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserAllocation {
    pub selected: bool,
    pub power_w: f64,
    pub compression_o: f64,
    pub bandwidth_hz: f64,
}

/// Feasible joint allocation; every invariant of the constraint set holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceAction {
    pub users: Vec<UserAllocation>,
}

impl ResourceAction {
    pub fn selected_count(&self) -> usize {
        self.users.iter().filter(|u| u.selected).count()
    }
}

/// Everything one step produces.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub reward: f64,
    pub energy_j: f64,
    pub energy_scaled: f64,
    /// Bottleneck delay: the slowest selected link's transmission time.
    pub time_s: f64,
    pub penalty: f64,
    pub budget: DistortionBudget,
    pub constraint_violated: bool,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Excess of the training-gap bound over its target; zero when the bound is
/// within budget. Uses the per-round form of the bound.
pub fn training_penalty(
    budget: &DistortionBudget,
    constants: &AiTaskConstants,
    epsilon_learn: f64,
) -> f64 {
    if budget.is_unbounded() {
        // Callers decide how to price the no-data case; the bound itself is
        // meaningless there.
        return f64::INFINITY;
    }
    let bound = training_gap_per_round(constants, budget.total_variance)
        .expect("budget variance validated on construction");
    (bound - epsilon_learn).max(0.0)
}

/// Excess of the inference-gap bound over its target. Zero total variance
/// means perfect data and no penalty.
pub fn inference_penalty(
    budget: &DistortionBudget,
    constants: &AiTaskConstants,
    epsilon_inf: f64,
) -> f64 {
    if budget.is_unbounded() {
        return f64::INFINITY;
    }
    if budget.total_variance == 0.0 {
        return 0.0;
    }
    let bound = inference_gap_bound(
        constants.posterior_confidence,
        constants.decision_boundary_w,
        budget.total_variance,
    )
    .expect("budget variance validated on construction");
    (bound - epsilon_inf).max(0.0)
}

/// Pooled distortion budget over the selected users, weighted by their data
/// counts. `None` when nobody transmits; unbounded when the SNR hook sees a
/// dead link.
pub fn pooled_budget(
    cfg: &EnvConfig,
    action: &ResourceAction,
    gains: &[f64],
) -> Option<DistortionBudget> {
    let mut counts = Vec::new();
    let mut sem = Vec::new();
    let mut model = Vec::new();
    let mut data = Vec::new();
    for (u, alloc) in action.users.iter().enumerate() {
        if !alloc.selected {
            continue;
        }
        counts.push(cfg.user_data_counts[u]);
        sem.push(
            cfg.table
                .distortion_for_ratio(alloc.compression_o)
                .expect("squashed o lies in (0, 1]"),
        );
        model.push(if cfg.model_variance_from_snr {
            let noise = cfg.radio.interference_i + alloc.bandwidth_hz * cfg.radio.noise_psd_n0;
            let signal = gains[u] * alloc.power_w;
            if signal > 0.0 {
                noise / signal
            } else {
                f64::INFINITY
            }
        } else {
            cfg.model_variance
        });
        data.push(cfg.data_variance);
    }
    if counts.is_empty() {
        return None;
    }
    if model.iter().any(|v| !v.is_finite()) {
        return Some(DistortionBudget::unbounded());
    }
    let sem_p = pool_users(&counts, &sem).expect("validated");
    let model_p = pool_users(&counts, &model).expect("validated");
    let data_p = pool_users(&counts, &data).expect("validated");
    Some(DistortionBudget::new(sem_p, model_p, data_p).expect("pooled components finite"))
}

/// The phase's raw bound value for a budget. An unbounded budget (no data
/// arrived) maps to `f64::MAX`: worse than any finite target, yet still
/// below an explicitly infinite one.
pub fn resilience_bound(cfg: &EnvConfig, budget: &DistortionBudget, phase: Phase) -> f64 {
    if budget.is_unbounded() {
        return f64::MAX;
    }
    match phase {
        Phase::Training => training_gap_per_round(&cfg.ai, budget.total_variance)
            .expect("budget variance validated on construction"),
        Phase::Inference => {
            if budget.total_variance == 0.0 {
                0.0
            } else {
                inference_gap_bound(
                    cfg.ai.posterior_confidence,
                    cfg.ai.decision_boundary_w,
                    budget.total_variance,
                )
                .expect("budget variance validated on construction")
            }
        }
    }
}

/// The resilience target the given phase must stay under.
pub fn epsilon_target(cfg: &EnvConfig, phase: Phase) -> f64 {
    match phase {
        Phase::Training => cfg.epsilon_learn,
        Phase::Inference => cfg.epsilon_inf,
    }
}

/// Discounted episode score, later steps weighted more:
/// `sum_t gamma^(T - t) * r_t` with `t` one-based.
pub fn episode_return(rewards: &[f64], gamma: f64) -> Result<f64> {
    if rewards.is_empty() {
        return Err(invalid("rewards", "must be nonempty"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", "must lie in (0, 1]"));
    }
    let t_final = rewards.len() as i32;
    Ok(rewards
        .iter()
        .enumerate()
        .map(|(i, &r)| gamma.powi(t_final - 1 - i as i32) * r)
        .sum())
}

/// The decision environment. Owns episode geometry, fading evolution, and
/// the RNG; one instance is stepped sequentially by a single owner.
#[derive(Debug, Clone)]
pub struct SemComEnv {
    cfg: EnvConfig,
    distances_km: Vec<f64>,
    shadow_db: Vec<f64>,
    fading: Vec<f64>,
    timestep: usize,
    rng: ChaCha8Rng,
}

/// Users closer than this to the base station are pushed out to it; the
/// path-loss models blow up at zero distance.
const MIN_DISTANCE_KM: f64 = 1e-3;

impl SemComEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let mut env = Self {
            distances_km: vec![0.0; cfg.user_count],
            shadow_db: vec![0.0; cfg.user_count],
            fading: vec![1.0; cfg.user_count],
            timestep: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            cfg,
        };
        env.reset(0);
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    /// Starts a fresh episode: new positions, new shadowing, new fading.
    /// Identical seeds reproduce identical episodes.
    pub fn reset(&mut self, seed: u64) -> EnvState {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let half = self.cfg.region_side_km / 2.0;
        for u in 0..self.cfg.user_count {
            let x = self.rng.gen_range(-half..half);
            let y = self.rng.gen_range(-half..half);
            self.distances_km[u] = x.hypot(y).max(MIN_DISTANCE_KM);
        }
        let shadow_sigma = self.cfg.radio.shadow_fading_db_sigma;
        for u in 0..self.cfg.user_count {
            self.shadow_db[u] = self.sample_standard_normal() * shadow_sigma;
        }
        self.redraw_fading();
        self.timestep = 0;
        self.state()
    }

    pub fn state(&self) -> EnvState {
        EnvState {
            gains: self.gains(),
            timestep: self.timestep,
        }
    }

    fn sample_standard_normal(&mut self) -> f64 {
        use rand_distr::{Distribution, StandardNormal};
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut self.rng)
    }

    fn redraw_fading(&mut self) {
        for u in 0..self.cfg.user_count {
            // Squared-envelope fading power: unit-mean exponential.
            let uniform: f64 = self.rng.gen::<f64>().max(f64::MIN_POSITIVE);
            self.fading[u] = -uniform.ln();
        }
    }

    fn gains(&self) -> Vec<f64> {
        (0..self.cfg.user_count)
            .map(|u| {
                channel_gain(
                    self.distances_km[u],
                    self.fading[u],
                    self.shadow_db[u],
                    self.cfg.gain_model,
                )
                .expect("distances clamped positive")
            })
            .collect()
    }

    /// Maps unconstrained logits onto the feasible set. Never fails on
    /// finite input, and the output satisfies every allocation constraint
    /// regardless of the input values.
    pub fn squash_action(&self, raw: &RawAction) -> Result<ResourceAction> {
        if raw.per_user.len() != self.cfg.user_count {
            return Err(Error::ShapeMismatch {
                context: "squash_action",
                expected: self.cfg.user_count,
                got: raw.per_user.len(),
            });
        }
        for (u, logits) in raw.per_user.iter().enumerate() {
            if logits.iter().any(|v| !v.is_finite()) {
                return Err(invalid("raw_action", format!("non-finite logit for user {u}")));
            }
        }
        let p_max = self.cfg.radio.power_cap_pmax;
        let b_max = self.cfg.radio.bandwidth_cap_bmax;
        let o_min = self.cfg.min_o();

        let mut users: Vec<UserAllocation> = raw
            .per_user
            .iter()
            .map(|l| UserAllocation {
                selected: self.cfg.mandatory_selection || sigmoid(l[0]) >= 0.5,
                power_w: p_max * sigmoid(l[1]),
                compression_o: o_min + (1.0 - o_min) * sigmoid(l[2]),
                bandwidth_hz: 0.0,
            })
            .collect();

        // Softmax over the selected users' bandwidth logits splits the cap.
        let selected: Vec<usize> = (0..users.len()).filter(|&u| users[u].selected).collect();
        if !selected.is_empty() {
            let max_logit = selected
                .iter()
                .map(|&u| raw.per_user[u][3])
                .fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = selected
                .iter()
                .map(|&u| (raw.per_user[u][3] - max_logit).exp())
                .collect();
            let norm: f64 = weights.iter().sum();
            for (&u, w) in selected.iter().zip(&weights) {
                users[u].bandwidth_hz = b_max * w / norm;
            }
            // Guard against the softmax summing a hair above one.
            let total: f64 = selected.iter().map(|&u| users[u].bandwidth_hz).sum();
            if total > b_max {
                let shrink = b_max / total;
                for &u in &selected {
                    users[u].bandwidth_hz *= shrink;
                }
            }
        }
        Ok(ResourceAction { users })
    }

    fn link_allocations(&self, action: &ResourceAction) -> Vec<LinkAllocation> {
        action
            .users
            .iter()
            .map(|u| LinkAllocation {
                selected_beta: u.selected,
                power_p: u.power_w,
                bandwidth_b: u.bandwidth_hz,
                compression_o: u.compression_o,
                payload_z: self.cfg.payload_bits,
            })
            .collect()
    }

    fn phase_penalty(&self, budget: &DistortionBudget, phase: Phase) -> f64 {
        match phase {
            Phase::Training => training_penalty(budget, &self.cfg.ai, self.cfg.epsilon_learn),
            Phase::Inference => inference_penalty(budget, &self.cfg.ai, self.cfg.epsilon_inf),
        }
    }

    /// Applies one action, pays the reward, and advances fading.
    pub fn step(&mut self, raw: &RawAction, phase: Phase) -> Result<StepOutcome> {
        let action = self.squash_action(raw)?;
        let gains = self.gains();
        let rates: Vec<f64> = action
            .users
            .iter()
            .enumerate()
            .map(|(u, a)| achievable_rate(a.bandwidth_hz, a.power_w, gains[u], &self.cfg.radio))
            .collect();

        let allocs = self.link_allocations(&action);
        let dead_link = allocs
            .iter()
            .zip(&rates)
            .any(|(a, &r)| a.selected_beta && r <= 0.0);
        let budget = pooled_budget(&self.cfg, &action, &gains);
        let no_data = budget.map_or(true, |b| b.is_unbounded());

        let (energy_j, time_s, budget, penalty, violated) = if dead_link || no_data {
            // No usable data this round: nothing is charged for energy and
            // the configured flat penalty stands in for the unbounded
            // distortion of an empty pool.
            (
                0.0,
                0.0,
                DistortionBudget::unbounded(),
                self.cfg.violation_penalty,
                true,
            )
        } else {
            let budget = budget.expect("checked above");
            let mut energy = 0.0;
            let mut bottleneck = 0.0f64;
            for (alloc, &rate) in allocs.iter().zip(&rates) {
                if alloc.selected_beta {
                    let t = alloc.compression_o * alloc.payload_z / rate;
                    energy += alloc.power_p * t;
                    bottleneck = bottleneck.max(t);
                }
            }
            let penalty = self.phase_penalty(&budget, phase);
            (energy, bottleneck, budget, penalty, penalty > 0.0)
        };

        let energy_scaled = energy_j / self.cfg.energy_scale_j();
        let reward = -energy_scaled - self.cfg.lambda * penalty;

        self.redraw_fading();
        self.timestep += 1;

        Ok(StepOutcome {
            next_state: self.state(),
            reward,
            energy_j,
            energy_scaled,
            time_s,
            penalty,
            budget,
            constraint_violated: violated,
        })
    }
}
