//! Fast self-checks behind the CLI `verify` subcommand.
//!
//! Each check pits an implementation path against an independent reference:
//! Monte-Carlo sampling against closed-form variance addition, measured
//! table points against lookups, a gradient step on an explicit quadratic
//! against the one-step bound identity, Gaussian tail frequencies against
//! the total-variation bound, constraint fuzzing against the squash
//! invariants, and finite differences against backpropagation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::compression::CompressionTable;
use crate::config::SystemConfig;
use crate::distortion::{compose_sequential, mc_convolution_oracle, tv_bound};
use crate::env::SemComEnv;
use crate::nn::DenseNetwork;

/// Outcome of one self-check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Monte-Carlo convolution agrees with analytic variance addition: the
/// fixed two-stage case within 1%, randomized three-stage cases within 2%.
pub fn check_variance_additivity() -> CheckResult {
    let name = "variance_additivity";
    let mc = match mc_convolution_oracle(&[0.04, 0.09], 1_000_000, 2024) {
        Ok(v) => v,
        Err(e) => return CheckResult::new(name, false, e.to_string()),
    };
    let fixed_rel = (mc - 0.13).abs() / 0.13;
    let mut worst_rel = fixed_rel;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for trial in 0..4u64 {
        let vars: Vec<f64> = (0..3).map(|_| 0.001 + rng.gen::<f64>()).collect();
        let analytic = compose_sequential(&vars).expect("nonnegative by construction");
        let sampled = mc_convolution_oracle(&vars, 1_000_000, 3000 + trial).expect("valid");
        worst_rel = worst_rel.max((sampled - analytic).abs() / analytic);
    }
    CheckResult::new(
        name,
        fixed_rel < 0.01 && worst_rel < 0.02,
        format!("two-stage rel err {fixed_rel:.2e}, worst randomized rel err {worst_rel:.2e}"),
    )
}

/// Every measured table point reproduces exactly; interpolated lookups stay
/// bracketed by their neighbors.
pub fn check_table_fidelity() -> CheckResult {
    let name = "compression_table_fidelity";
    let table = CompressionTable::default_table();
    for e in table.entries() {
        let got = table.distortion_for_ratio(1.0 / e.ratio).expect("in range");
        if got != e.mse_loss {
            return CheckResult::new(
                name,
                false,
                format!("ratio {}: expected {}, got {got}", e.ratio, e.mse_loss),
            );
        }
    }
    let entries = table.entries();
    for pair in entries.windows(2) {
        let mid_ratio = (pair[0].ratio * pair[1].ratio).sqrt();
        let mid = table.distortion_for_ratio(1.0 / mid_ratio).expect("in range");
        let (lo, hi) = (pair[1].mse_loss, pair[0].mse_loss);
        if !(lo <= mid && mid <= hi) {
            return CheckResult::new(
                name,
                false,
                format!("midpoint at ratio {mid_ratio} escaped [{lo}, {hi}]: {mid}"),
            );
        }
    }
    CheckResult::new(
        name,
        true,
        format!("{} points exact, midpoints bracketed", entries.len()),
    )
}

/// For the explicit quadratic `F(w) = (L/2) |w|^2`, one gradient step lands
/// exactly on `F(w) + (eta^2 L/2 - eta) |grad F(w)|^2`.
pub fn check_descent_identity() -> CheckResult {
    let name = "descent_step_identity";
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for &l in &[10.0, 17.0, 25.0, 32.5, 40.0] {
        for _ in 0..100 {
            let dim = rng.gen_range(1..6);
            let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let eta = rng.gen_range(0.001..0.5);
            let grad: Vec<f64> = w.iter().map(|x| l * x).collect();
            let stepped: Vec<f64> = w.iter().zip(&grad).map(|(x, g)| x - eta * g).collect();
            let f = |v: &[f64]| 0.5 * l * v.iter().map(|x| x * x).sum::<f64>();
            let lhs = f(&stepped);
            let rhs = f(&w) + (eta * eta * l / 2.0 - eta) * grad.iter().map(|g| g * g).sum::<f64>();
            let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-30);
            worst = worst.max(rel);
        }
    }
    CheckResult::new(
        name,
        worst < 1e-10,
        format!("worst relative deviation {worst:.2e} over 500 starts"),
    )
}

/// Empirical Gaussian tail frequencies stay below the total-variation bound
/// plus three Monte-Carlo standard errors for every tested (W, sigma).
pub fn check_tv_tail_bound() -> CheckResult {
    let name = "tv_tail_bound";
    let n = 1_000_000u32;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut detail = String::new();
    for &sigma in &[0.5, 1.0] {
        let dist = Normal::new(0.0, sigma).expect("positive sigma");
        for &w in &[0.5, 1.0, 2.0] {
            let mut exceed = 0u32;
            for _ in 0..n {
                if dist.sample(&mut rng) >= w {
                    exceed += 1;
                }
            }
            let freq = exceed as f64 / n as f64;
            let bound = tv_bound(w, sigma * sigma).expect("valid");
            let se = (freq * (1.0 - freq) / n as f64).sqrt();
            if freq > bound + 3.0 * se {
                return CheckResult::new(
                    name,
                    false,
                    format!("sigma {sigma}, W {w}: freq {freq:.5} > bound {bound:.5} + 3se"),
                );
            }
            detail = format!("last case sigma {sigma}, W {w}: freq {freq:.5} <= bound {bound:.5}");
        }
    }
    CheckResult::new(name, true, detail)
}

/// Ten thousand random raw actions all squash into the feasible set.
pub fn check_squash_feasibility() -> CheckResult {
    let name = "squash_feasibility";
    let cfg = SystemConfig::default();
    let env = match cfg.env_config().and_then(SemComEnv::new) {
        Ok(env) => env,
        Err(e) => return CheckResult::new(name, false, e.to_string()),
    };
    let user_count = env.config().user_count;
    let b_max = env.config().radio.bandwidth_cap_bmax;
    let p_max = env.config().radio.power_cap_pmax;
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for trial in 0..10_000 {
        let raw = crate::env::RawAction {
            per_user: (0..user_count)
                .map(|_| {
                    std::array::from_fn(|_| {
                        let x: f64 = StandardNormal.sample(&mut rng);
                        x * 10.0
                    })
                })
                .collect(),
        };
        let action = match env.squash_action(&raw) {
            Ok(a) => a,
            Err(e) => return CheckResult::new(name, false, format!("trial {trial}: {e}")),
        };
        let sum_bw: f64 = action.users.iter().filter(|u| u.selected).map(|u| u.bandwidth_hz).sum();
        let ok = sum_bw <= b_max
            && action.users.iter().all(|u| {
                u.bandwidth_hz >= 0.0
                    && (0.0..=p_max).contains(&u.power_w)
                    && u.compression_o > 0.0
                    && u.compression_o <= 1.0
                    && (u.selected || u.bandwidth_hz == 0.0)
            });
        if !ok {
            return CheckResult::new(name, false, format!("trial {trial} violated a constraint"));
        }
    }
    CheckResult::new(name, true, "10000 random actions, zero violations".into())
}

/// Backpropagation matches central finite differences across 50 random
/// networks up to 16-32-16.
pub fn check_gradient_correctness() -> CheckResult {
    let name = "gradient_correctness";
    let shapes: [&[usize]; 4] = [&[3, 5, 2], &[8, 16, 4], &[16, 32, 16], &[4, 4]];
    let eps = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst = 0.0f64;
    for trial in 0..50u64 {
        let sizes = shapes[trial as usize % shapes.len()];
        let net = DenseNetwork::new(sizes, 5000 + trial).expect("valid sizes");
        let input: Vec<f64> = (0..sizes[0]).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let upstream: Vec<f64> =
            (0..*sizes.last().unwrap()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tape = net.backward(&input, &upstream).expect("shapes match");
        let loss = |n: &DenseNetwork| -> f64 {
            n.forward(&input)
                .expect("shapes match")
                .iter()
                .zip(&upstream)
                .map(|(o, u)| o * u)
                .sum()
        };
        for l in 0..net.weights.len() {
            let stride = (net.weights[l].len() / 20).max(1);
            for k in (0..net.weights[l].len()).step_by(stride) {
                let mut plus = net.clone();
                plus.weights[l][k] += eps;
                let mut minus = net.clone();
                minus.weights[l][k] -= eps;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * eps);
                let analytic = tape.weight_grads[l][k];
                let rel = (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
    }
    CheckResult::new(
        name,
        worst < 1e-4,
        format!("worst relative error {worst:.2e} over 50 networks"),
    )
}

/// Runs every check.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        check_variance_additivity(),
        check_table_fidelity(),
        check_descent_identity(),
        check_tv_tail_bound(),
        check_squash_feasibility(),
        check_gradient_correctness(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for check in run_all() {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }
}
