//! Shared test machinery: independent numeric optimizers for the two
//! best-response problems and random instance generators.
//!
//! The optimizers deliberately avoid the closed forms under test. The
//! classifier side minimizes the expected negative log-likelihood by
//! exponentiated-gradient (mirror) descent; the generator side maximizes
//! the KL-regularized reward by Euclidean projected gradient ascent with
//! backtracking.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use guardgame::dist::{
    pair_index, ConditionalTable, Label, ProbVector, RegularityParams, SeedJoint,
};
use guardgame::game::GameState;

pub fn random_simplex(size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..size).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let sum: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / sum).collect()
}

/// Dirichlet row mixed halfway toward uniform, keeping entries away from
/// the boundary.
pub fn interior_simplex(size: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw = random_simplex(size, rng);
    raw.into_iter()
        .map(|v| 0.5 * v + 0.5 / size as f64)
        .collect()
}

pub fn random_table(rows: usize, outcomes: usize, rng: &mut ChaCha8Rng) -> ConditionalTable {
    ConditionalTable::new((0..rows).map(|_| random_simplex(outcomes, rng)).collect()).unwrap()
}

pub fn interior_table(rows: usize, outcomes: usize, rng: &mut ChaCha8Rng) -> ConditionalTable {
    ConditionalTable::new((0..rows).map(|_| interior_simplex(outcomes, rng)).collect()).unwrap()
}

/// One random game instance for best-response checks.
pub struct RandomInstance {
    pub x_size: usize,
    pub x_tilde_size: usize,
    pub rho: SeedJoint,
    pub p_ref: ConditionalTable,
    pub generator: ConditionalTable,
    pub classifier: ConditionalTable,
    pub beta: f64,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> RandomInstance {
    let x_size = rng.random_range(1..=4);
    let x_tilde_size = rng.random_range(2..=6);
    let rho = SeedJoint::new(random_simplex(x_size * 2, rng), x_size).unwrap();
    let p_ref = interior_table(x_size * 2, x_tilde_size, rng);
    let generator = interior_table(x_size * 2, x_tilde_size, rng);
    let classifier = interior_table(x_tilde_size, 2, rng);
    let beta = 0.5 + rng.random::<f64>() * 9.5;
    RandomInstance {
        x_size,
        x_tilde_size,
        rho,
        p_ref,
        generator,
        classifier,
        beta,
    }
}

/// A contractive instance: uniform x-marginal, interior reference, a
/// tight but valid alpha floor, and beta doubled until the Lipschitz
/// product certifies contraction.
pub struct ContractiveInstance {
    pub rho: SeedJoint,
    pub p_ref: ConditionalTable,
    pub params: RegularityParams,
    pub initial: GameState,
}

pub fn contractive_instance(rng: &mut ChaCha8Rng) -> ContractiveInstance {
    let x_size = rng.random_range(1..=3);
    let x_tilde_size = rng.random_range(2..=5);
    let splits: Vec<f64> = (0..x_size)
        .map(|_| 0.3 + 0.4 * rng.random::<f64>())
        .collect();
    let rho = SeedJoint::with_uniform_x_marginal(&splits).unwrap();
    let p_ref = interior_table(x_size * 2, x_tilde_size, rng);

    // smallest reference marginal over generated tokens
    let mut min_marginal = f64::INFINITY;
    for xt in 0..x_tilde_size {
        let mut mass = 0.0;
        for x in 0..x_size {
            for label in Label::ALL {
                mass += rho.weight(x, label) * p_ref.prob(pair_index(x, label), xt);
            }
        }
        min_marginal = min_marginal.min(mass);
    }

    let gamma = 0.02;
    let delta = 1.0; // the tilt normalizer always dominates the row mass
    let alpha = 0.85 * min_marginal;
    let mut beta = 8000.0;
    let mut params = RegularityParams::new(beta, gamma, delta, alpha).unwrap();
    while !guardgame::game::lipschitz_bounds(&params, x_size).contractive {
        beta *= 2.0;
        params = RegularityParams::new(beta, gamma, delta, alpha).unwrap();
    }

    let initial = GameState {
        classifier: interior_table(x_tilde_size, 2, rng),
        generator: p_ref.clone(),
    };
    ContractiveInstance {
        rho,
        p_ref,
        params,
        initial,
    }
}

// ---------------------------------------------------------------------------
// classifier-side oracle: mirror descent on the expected NLL
// ---------------------------------------------------------------------------

/// Joint mass `m(x_tilde, y)` of the label and the generated token under
/// `rho x generator`.
pub fn joint_label_mass(generator: &ConditionalTable, rho: &SeedJoint) -> Vec<[f64; 2]> {
    let x_tilde_size = generator.num_outcomes();
    let mut mass = vec![[0.0; 2]; x_tilde_size];
    for xt in 0..x_tilde_size {
        for x in 0..rho.x_size() {
            for label in Label::ALL {
                mass[xt][label.index()] +=
                    rho.weight(x, label) * generator.prob(pair_index(x, label), xt);
            }
        }
    }
    mass
}

/// Minimizes `sum_y m_y * (-ln q_y)` over the probability simplex by
/// exponentiated gradient descent with backtracking, far past the 1e-10
/// stationarity target.
pub fn mirror_descent_nll_row(mass: &[f64], iters: usize) -> Vec<f64> {
    let size = mass.len();
    let objective = |q: &[f64]| -> f64 {
        q.iter()
            .zip(mass)
            .map(|(&qi, &mi)| if mi == 0.0 { 0.0 } else { -mi * qi.ln() })
            .sum()
    };
    let mut q = vec![1.0 / size as f64; size];
    let mut value = objective(&q);
    let mut step = 0.5;
    for _ in 0..iters {
        let gradient: Vec<f64> = q
            .iter()
            .zip(mass)
            .map(|(&qi, &mi)| -mi / qi.max(1e-300))
            .collect();
        let mut moved = 0.0;
        let mut accepted = false;
        for _ in 0..60 {
            // multiplicative update in log space, normalized
            let logs: Vec<f64> = q
                .iter()
                .zip(&gradient)
                .map(|(&qi, &gi)| qi.max(1e-300).ln() - step * gi)
                .collect();
            let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
            let total: f64 = weights.iter().sum();
            let trial: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
            let trial_value = objective(&trial);
            if trial_value <= value {
                moved = q
                    .iter()
                    .zip(&trial)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
                q = trial;
                value = trial_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || moved < 1e-15 {
            break;
        }
        step = (step * 1.5).min(4.0);
    }
    q
}

/// Full-table classifier oracle: one mirror-descent run per generated
/// token.
pub fn numeric_classifier_response(
    generator: &ConditionalTable,
    rho: &SeedJoint,
) -> ConditionalTable {
    let mass = joint_label_mass(generator, rho);
    ConditionalTable::from_rows(
        mass.iter()
            .map(|row| ProbVector::new(mirror_descent_nll_row(row, 20_000).to_vec()).unwrap())
            .collect(),
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// generator-side oracle: projected gradient ascent on the PPO objective
// ---------------------------------------------------------------------------

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_to_simplex(point: &[f64]) -> Vec<f64> {
    let mut sorted = point.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (i, &value) in sorted.iter().enumerate() {
        cumulative += value;
        let candidate = (cumulative - 1.0) / (i + 1) as f64;
        if value - candidate > 0.0 {
            threshold = candidate;
        }
    }
    point.iter().map(|&v| (v - threshold).max(0.0)).collect()
}

/// Maximizes `sum_i p_i r_i - beta * KL(p || ref)` over the simplex by
/// projected gradient ascent with backtracking line search.
pub fn projected_gradient_ppo_row(
    rewards: &[f64],
    reference: &[f64],
    beta: f64,
    iters: usize,
) -> Vec<f64> {
    let size = rewards.len();
    let objective = |p: &[f64]| -> f64 {
        let mut value = 0.0;
        for i in 0..size {
            if p[i] > 0.0 {
                value += p[i] * rewards[i] - beta * p[i] * (p[i] / reference[i]).ln();
            }
        }
        value
    };
    let mut p = vec![1.0 / size as f64; size];
    let mut value = objective(&p);
    let mut step = 1.0 / (beta + 1.0);
    for _ in 0..iters {
        let gradient: Vec<f64> = (0..size)
            .map(|i| rewards[i] - beta * ((p[i].max(1e-12) / reference[i]).ln() + 1.0))
            .collect();
        let mut moved = 0.0;
        let mut accepted = false;
        for _ in 0..60 {
            let shifted: Vec<f64> = p
                .iter()
                .zip(&gradient)
                .map(|(&pi, &gi)| pi + step * gi)
                .collect();
            let trial = project_to_simplex(&shifted);
            let trial_value = objective(&trial);
            if trial_value >= value {
                moved = p
                    .iter()
                    .zip(&trial)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
                p = trial;
                value = trial_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || moved < 1e-15 {
            break;
        }
        step = (step * 1.5).min(1e3);
    }
    p
}

/// Full-table generator oracle: one projected-gradient run per seed pair.
pub fn numeric_generator_response(
    classifier: &ConditionalTable,
    p_ref: &ConditionalTable,
    beta: f64,
) -> ConditionalTable {
    let x_tilde_size = p_ref.num_outcomes();
    let mut rows = Vec::with_capacity(p_ref.num_rows());
    for row_idx in 0..p_ref.num_rows() {
        let label = Label::from_index(row_idx % 2).unwrap();
        let rewards: Vec<f64> = (0..x_tilde_size)
            .map(|xt| -classifier.prob(xt, label.index()).ln())
            .collect();
        let reference: Vec<f64> = p_ref.row(row_idx).iter().copied().collect();
        let solution = projected_gradient_ppo_row(&rewards, &reference, beta, 200_000);
        rows.push(ProbVector::new(solution).unwrap());
    }
    ConditionalTable::from_rows(rows).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
