//! Structural properties of the tabular game: best-response optimality
//! against numeric optimizers, tilt monotonicity, objective curvature,
//! contraction of the squared map, and fixed-point uniqueness.

mod common;

use common::*;
use rand::Rng;
use guardgame::dist::{l1_distance, pair_index, Label};
use guardgame::game::{
    best_response_classifier, best_response_generator, iterate_to_fixed_point, lipschitz_bounds,
    minimax_objective, reward, GameState, ZeroMarginalPolicy,
};

#[test]
fn best_responses_match_numeric_optimizers_on_random_instances() {
    let mut rng = seeded(101);
    for trial in 0..20 {
        let instance = random_instance(&mut rng);
        let closed =
            best_response_classifier(&instance.generator, &instance.rho, ZeroMarginalPolicy::Error)
                .unwrap();
        let numeric = numeric_classifier_response(&instance.generator, &instance.rho);
        let gap = l1_distance(&closed.table, &numeric).unwrap();
        assert!(gap < 1e-6, "trial {trial}: classifier gap {gap}");

        let closed =
            best_response_generator(&instance.classifier, &instance.p_ref, instance.beta).unwrap();
        let numeric =
            numeric_generator_response(&instance.classifier, &instance.p_ref, instance.beta);
        let gap = l1_distance(&closed, &numeric).unwrap();
        assert!(gap < 1e-6, "trial {trial}: generator gap {gap}");
    }
}

#[test]
fn tilt_ratio_is_monotone_in_reward() {
    let mut rng = seeded(7);
    for _ in 0..50 {
        let instance = random_instance(&mut rng);
        let response =
            best_response_generator(&instance.classifier, &instance.p_ref, instance.beta).unwrap();
        for x in 0..instance.x_size {
            for label in Label::ALL {
                let row = pair_index(x, label);
                for a in 0..instance.x_tilde_size {
                    for b in (a + 1)..instance.x_tilde_size {
                        let reward_a = reward(&instance.classifier, label, a).unwrap();
                        let reward_b = reward(&instance.classifier, label, b).unwrap();
                        if reward_a <= reward_b {
                            continue;
                        }
                        let ratio_a =
                            response.prob(row, a) / instance.p_ref.prob(row, a);
                        let ratio_b =
                            response.prob(row, b) / instance.p_ref.prob(row, b);
                        assert!(
                            ratio_a > ratio_b,
                            "higher-reward outcome must be tilted up more: \
                             r({a})={reward_a} ratio {ratio_a}, r({b})={reward_b} ratio {ratio_b}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn objective_is_concave_in_generator_convex_in_classifier() {
    let mut rng = seeded(23);
    for _ in 0..100 {
        let instance = random_instance(&mut rng);
        let lambda: f64 = rng.random::<f64>();
        let mix_tables = |a: &guardgame::dist::ConditionalTable,
                          b: &guardgame::dist::ConditionalTable| {
            guardgame::dist::ConditionalTable::new(
                a.rows()
                    .iter()
                    .zip(b.rows())
                    .map(|(ra, rb)| {
                        ra.iter()
                            .zip(rb.iter())
                            .map(|(&va, &vb)| (1.0 - lambda) * va + lambda * vb)
                            .collect()
                    })
                    .collect(),
            )
            .unwrap()
        };

        // generator chord at fixed classifier: concave
        let generator_b = interior_table(instance.x_size * 2, instance.x_tilde_size, &mut rng);
        let value = |generator: &guardgame::dist::ConditionalTable| {
            minimax_objective(
                &GameState {
                    classifier: instance.classifier.clone(),
                    generator: generator.clone(),
                },
                &instance.rho,
                &instance.p_ref,
                instance.beta,
            )
            .unwrap()
        };
        let mixed = value(&mix_tables(&instance.generator, &generator_b));
        let chord = (1.0 - lambda) * value(&instance.generator) + lambda * value(&generator_b);
        assert!(
            mixed >= chord - 1e-9,
            "generator chord above function: {mixed} < {chord}"
        );

        // classifier chord at fixed generator: convex
        let classifier_b = interior_table(instance.x_tilde_size, 2, &mut rng);
        let value = |classifier: &guardgame::dist::ConditionalTable| {
            minimax_objective(
                &GameState {
                    classifier: classifier.clone(),
                    generator: instance.generator.clone(),
                },
                &instance.rho,
                &instance.p_ref,
                instance.beta,
            )
            .unwrap()
        };
        let mixed = value(&mix_tables(&instance.classifier, &classifier_b));
        let chord = (1.0 - lambda) * value(&instance.classifier) + lambda * value(&classifier_b);
        assert!(
            mixed <= chord + 1e-9,
            "classifier chord below function: {mixed} > {chord}"
        );
    }
}

fn apply_map(
    state: &GameState,
    instance: &ContractiveInstance,
) -> GameState {
    GameState {
        classifier: best_response_classifier(
            &state.generator,
            &instance.rho,
            ZeroMarginalPolicy::UniformRow,
        )
        .unwrap()
        .table
        .clamp_rows(instance.params.gamma)
        .unwrap(),
        generator: best_response_generator(&state.classifier, &instance.p_ref, instance.params.beta)
            .unwrap(),
    }
}

#[test]
fn squared_map_contracts_at_the_reported_rate() {
    let mut rng = seeded(59);
    for trial in 0..25 {
        let instance = contractive_instance(&mut rng);
        let bounds = lipschitz_bounds(&instance.params, instance.rho.x_size());
        assert!(bounds.contractive);
        let state_a = GameState {
            classifier: interior_table(instance.p_ref.num_outcomes(), 2, &mut rng),
            generator: instance.p_ref.clone(),
        };
        let state_b = GameState {
            classifier: interior_table(instance.p_ref.num_outcomes(), 2, &mut rng),
            generator: best_response_generator(
                &interior_table(instance.p_ref.num_outcomes(), 2, &mut rng),
                &instance.p_ref,
                instance.params.beta,
            )
            .unwrap(),
        };
        let squared_a = apply_map(&apply_map(&state_a, &instance), &instance);
        let squared_b = apply_map(&apply_map(&state_b, &instance), &instance);
        let before = state_a.l1_distance(&state_b).unwrap();
        let after = squared_a.l1_distance(&squared_b).unwrap();
        assert!(
            after <= bounds.product * before + 1e-12,
            "trial {trial}: squared map expanded {before} -> {after} against product {}",
            bounds.product
        );
    }
}

#[test]
fn contractive_fixed_point_is_unique_across_initializations() {
    let mut rng = seeded(83);
    for _ in 0..10 {
        let instance = contractive_instance(&mut rng);
        let run_a = iterate_to_fixed_point(
            GameState {
                classifier: interior_table(instance.p_ref.num_outcomes(), 2, &mut rng),
                generator: interior_table(
                    instance.rho.pair_count(),
                    instance.p_ref.num_outcomes(),
                    &mut rng,
                ),
            },
            &instance.rho,
            &instance.p_ref,
            &instance.params,
            1e-12,
            10_000,
        )
        .unwrap();
        let run_b = iterate_to_fixed_point(
            GameState {
                classifier: interior_table(instance.p_ref.num_outcomes(), 2, &mut rng),
                generator: interior_table(
                    instance.rho.pair_count(),
                    instance.p_ref.num_outcomes(),
                    &mut rng,
                ),
            },
            &instance.rho,
            &instance.p_ref,
            &instance.params,
            1e-12,
            10_000,
        )
        .unwrap();
        assert!(run_a.converged && run_b.converged);
        let gap = run_a
            .final_state()
            .l1_distance(run_b.final_state())
            .unwrap();
        assert!(gap < 1e-6, "independent runs disagree by {gap}");
    }
}
