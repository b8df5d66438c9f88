//! Reference policies: a random-action baseline and an exhaustive
//! grid-search oracle that certifies near-optimality on small instances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::achievable_rate;
use crate::env::{
    epsilon_target, pooled_budget, resilience_bound, EnvConfig, EnvState, Phase, RawAction,
    ResourceAction, UserAllocation,
};
use crate::error::{invalid, Result};

/// Fresh i.i.d. standard-normal logits for every user.
pub fn random_raw_action(user_count: usize, rng: &mut ChaCha8Rng) -> RawAction {
    RawAction {
        per_user: (0..user_count)
            .map(|_| std::array::from_fn(|_| StandardNormal.sample(rng)))
            .collect(),
    }
}

/// Random baseline action for a state: reproducible for a fixed seed, fresh
/// per timestep. Feasibility comes from the downstream squash, not from
/// here.
pub fn random_policy_step(state: &EnvState, seed: u64) -> RawAction {
    let derived = seed ^ (state.timestep as u64).wrapping_mul(0x9e3779b97f4a7c15);
    let mut rng = ChaCha8Rng::seed_from_u64(derived);
    random_raw_action(state.gains.len(), &mut rng)
}

/// Finite action grid for exhaustive search.
#[derive(Debug, Clone)]
pub struct GridSpec {
    /// Per-user transmit power candidates, W.
    pub power_levels: Vec<f64>,
    /// Per-user compression candidates, `o` in (0, 1].
    pub compression_choices: Vec<f64>,
    /// User subsets to consider.
    pub selection_patterns: Vec<Vec<bool>>,
    /// Simplex denominator for bandwidth splits: each selected user gets a
    /// positive integer number of `1/resolution` shares of the cap.
    pub bandwidth_resolution: u32,
}

impl GridSpec {
    /// Default grid for a scenario: 8 log-spaced power levels over
    /// `[P_max/100, P_max]`, every measured compression point plus lossless,
    /// all `2^U` selection patterns, quarter-granular bandwidth splits.
    pub fn for_env(cfg: &EnvConfig) -> Result<Self> {
        let u = cfg.user_count;
        if u > 3 {
            return Err(invalid(
                "user_count",
                format!("grid search is combinatorial; refusing U = {u} > 3"),
            ));
        }
        let p_max = cfg.radio.power_cap_pmax;
        let levels = 8;
        let power_levels: Vec<f64> = (0..levels)
            .map(|i| p_max / 100.0 * 100f64.powf(i as f64 / (levels - 1) as f64))
            .collect();
        let mut compression_choices: Vec<f64> =
            cfg.table.entries().iter().map(|e| 1.0 / e.ratio).collect();
        compression_choices.push(1.0);
        let selection_patterns = (0..(1u32 << u))
            .map(|mask| (0..u).map(|k| mask >> k & 1 == 1).collect())
            .collect();
        Ok(Self {
            power_levels,
            compression_choices,
            selection_patterns,
            bandwidth_resolution: 4,
        })
    }

    /// Keeps only patterns selecting at least `min_selected` users, ruling
    /// out the degenerate nobody-transmits optimum.
    pub fn mandatory_selection_variant(&self, min_selected: usize) -> Result<Self> {
        let user_count = self
            .selection_patterns
            .first()
            .map(|p| p.len())
            .unwrap_or(0);
        if min_selected > user_count {
            return Err(invalid(
                "min_selected",
                format!("cannot require {min_selected} of {user_count} users"),
            ));
        }
        Ok(Self {
            selection_patterns: self
                .selection_patterns
                .iter()
                .filter(|p| p.iter().filter(|&&s| s).count() >= min_selected)
                .cloned()
                .collect(),
            ..self.clone()
        })
    }
}

/// Best feasible grid point found for one state.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub action: ResourceAction,
    pub energy_j: f64,
    pub bound: f64,
}

/// All positive integer compositions of `total` into `parts` summands.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return vec![];
    }
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 1..=(total - parts as u32 + 1) {
        for mut rest in compositions(total - first, parts - 1) {
            let mut c = vec![first];
            c.append(&mut rest);
            out.push(c);
        }
    }
    out
}

/// Visits every evaluable grid point with its total energy and resilience
/// bound. Points where a selected link cannot carry data are skipped.
pub fn grid_enumerate(
    cfg: &EnvConfig,
    state: &EnvState,
    spec: &GridSpec,
    phase: Phase,
    visit: &mut dyn FnMut(&ResourceAction, f64, f64),
) -> Result<()> {
    if cfg.user_count > 3 {
        return Err(invalid(
            "user_count",
            format!("grid search is combinatorial; refusing U = {} > 3", cfg.user_count),
        ));
    }
    let u = cfg.user_count;
    let unselected = UserAllocation {
        selected: false,
        power_w: 0.0,
        compression_o: 1.0,
        bandwidth_hz: 0.0,
    };

    for pattern in &spec.selection_patterns {
        if pattern.len() != u {
            return Err(crate::Error::ShapeMismatch {
                context: "selection pattern",
                expected: u,
                got: pattern.len(),
            });
        }
        let selected: Vec<usize> = (0..u).filter(|&k| pattern[k]).collect();
        let k = selected.len();
        if k == 0 {
            let action = ResourceAction {
                users: vec![unselected; u],
            };
            visit(&action, 0.0, f64::MAX);
            continue;
        }
        if k as u32 > spec.bandwidth_resolution {
            continue;
        }
        let splits = compositions(spec.bandwidth_resolution, k);
        let n_pow = spec.power_levels.len();
        let n_cmp = spec.compression_choices.len();

        // Odometer over per-selected-user (power, compression) choices.
        let combos = (n_pow * n_cmp).pow(k as u32);
        for split in &splits {
            let bandwidths: Vec<f64> = split
                .iter()
                .map(|&s| cfg.radio.bandwidth_cap_bmax * s as f64 / spec.bandwidth_resolution as f64)
                .collect();
            let rates_by_power: Vec<Vec<f64>> = selected
                .iter()
                .zip(&bandwidths)
                .map(|(&user, &b)| {
                    spec.power_levels
                        .iter()
                        .map(|&p| achievable_rate(b, p, state.gains[user], &cfg.radio))
                        .collect()
                })
                .collect();

            for mut combo in 0..combos {
                let mut users = vec![unselected; u];
                let mut dead = false;
                let mut energy = 0.0;
                for (slot, &user) in selected.iter().enumerate() {
                    let pi = combo % n_pow;
                    combo /= n_pow;
                    let ci = combo % n_cmp;
                    combo /= n_cmp;
                    let rate = rates_by_power[slot][pi];
                    if rate <= 0.0 {
                        dead = true;
                        break;
                    }
                    let o = spec.compression_choices[ci];
                    let p = spec.power_levels[pi];
                    energy += p * o * cfg.payload_bits / rate;
                    users[user] = UserAllocation {
                        selected: true,
                        power_w: p,
                        compression_o: o,
                        bandwidth_hz: bandwidths[slot],
                    };
                }
                if dead {
                    continue;
                }
                let action = ResourceAction { users };
                let budget = pooled_budget(cfg, &action, &state.gains)
                    .expect("pattern has selected users");
                let bound = resilience_bound(cfg, &budget, phase);
                visit(&action, energy, bound);
            }
        }
    }
    Ok(())
}

/// Exhaustively minimizes energy over the grid subject to the phase's
/// resilience constraint (`bound < epsilon`). `None` when no grid point is
/// feasible.
pub fn grid_oracle_solve(
    cfg: &EnvConfig,
    state: &EnvState,
    spec: &GridSpec,
    phase: Phase,
) -> Result<Option<OracleSolution>> {
    let eps = epsilon_target(cfg, phase);
    let mut best: Option<OracleSolution> = None;
    grid_enumerate(cfg, state, spec, phase, &mut |action, energy, bound| {
        if bound < eps && best.as_ref().map_or(true, |b| energy < b.energy_j) {
            best = Some(OracleSolution {
                action: action.clone(),
                energy_j: energy,
                bound,
            });
        }
    })?;
    Ok(best)
}
