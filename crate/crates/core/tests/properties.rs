use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jeaae_core::analysis::{adversarial_region, combination_map, robustness_map, SampleGrid};
use jeaae_core::attack::apportion_cents;
use jeaae_core::audit::{benford_expected, benford_from_amounts};
use jeaae_core::data::{anonymize, desk_spec, synth_generate, Dataset};
use jeaae_core::model::{build_prior_grid, AAEConfig, AAEModel, Trainer};
use jeaae_core::neural::{Activation, AdamState, DenseLayer, Network};

fn activation(tag: u8) -> Activation {
    match tag % 3 {
        0 => Activation::LeakyRelu { alpha: 0.4 },
        1 => Activation::Tanh,
        _ => Activation::Sigmoid,
    }
}

fn network(seed: u64, dims: &[usize], tags: &[u8]) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .zip(tags)
        .map(|(w, &t)| {
            let weights = Array2::from_shape_fn((w[1], w[0]), |_| rng.random_range(-1.0..1.0));
            let bias = Array1::from_shape_fn(w[1], |_| rng.random_range(-0.5..0.5));
            DenseLayer::new(weights, bias, activation(t)).unwrap()
        })
        .collect();
    Network::from_layers(layers).unwrap()
}

fn small_model(seed: u64) -> (Dataset, AAEModel) {
    let ds = synth_generate(&desk_spec(), 300, seed).unwrap();
    let cfg = AAEConfig {
        seed,
        ..AAEConfig::desk()
    };
    let model = Trainer::new(&ds, cfg).unwrap().into_model();
    (ds, model)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn backward_matches_central_differences(
        seed in any::<u64>(),
        dims in prop::collection::vec(1usize..=8, 2..=4),
        tags in prop::collection::vec(any::<u8>(), 3),
    ) {
        let net = network(seed, &dims, &tags);
        let x = Array2::from_shape_fn((2, dims[0]), |(i, j)| ((i * 5 + j * 3) % 7) as f64 / 3.5 - 1.0);
        let probe = Array2::from_shape_fn((2, net.output_dim()), |(i, j)| 0.3 + 0.2 * (i + j) as f64);
        let trace = net.forward_batch(x.view()).unwrap();
        let grads = net.backward(&trace, probe.view(), true).unwrap();
        let loss = |x: &Array2<f64>| (&net.predict_batch(x.view()).unwrap() * &probe).sum();
        let input_grad = grads.input.unwrap();
        let h = 1e-5;
        for r in 0..x.nrows() {
            for c in 0..x.ncols() {
                let mut up = x.clone();
                up[[r, c]] += h;
                let mut down = x.clone();
                down[[r, c]] -= h;
                let numeric = (loss(&up) - loss(&down)) / (2.0 * h);
                let a = input_grad[[r, c]];
                prop_assert!((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-5) < 1e-4);
            }
        }
    }

    #[test]
    fn saturating_activations_stay_in_open_codomains(x in prop::num::f64::NORMAL | prop::num::f64::ZERO) {
        let s = Activation::Sigmoid.apply(x);
        let t = Activation::Tanh.apply(x);
        prop_assert!(s > 0.0 && s < 1.0);
        prop_assert!(t > -1.0 && t < 1.0);
    }

    #[test]
    fn mismatched_layers_do_not_chain(a in 1usize..6, b in 1usize..6, c in 1usize..6) {
        prop_assume!(b != c);
        let l1 = DenseLayer::new(Array2::zeros((b, a)), Array1::zeros(b), Activation::Tanh).unwrap();
        let l2 = DenseLayer::new(Array2::zeros((1, c)), Array1::zeros(1), Activation::Tanh).unwrap();
        prop_assert!(Network::from_layers(vec![l1, l2]).is_err());
    }

    #[test]
    fn adam_starts_at_zero_and_rejects_bad_betas(
        sizes in prop::collection::vec(1usize..20, 1..4),
        b1 in -1.0f64..2.0,
    ) {
        let s = AdamState::new(&sizes, 1e-3).unwrap();
        prop_assert_eq!(s.step_count(), 0);
        prop_assert!(s.first_moment().iter().chain(s.second_moment()).flatten().all(|&v| v == 0.0));
        let r = AdamState::with_hyperparameters(&sizes, 1e-3, b1, 0.999, 1e-9);
        prop_assert_eq!(r.is_ok(), b1 > 0.0 && b1 < 1.0);
    }

    #[test]
    fn prior_lattice_is_equidistant(side in 2usize..=10, lo in -3.0f64..0.0, width in 0.5f64..4.0) {
        let grid = build_prior_grid(side * side, (lo, lo + width), None).unwrap();
        let means = grid.means();
        prop_assert_eq!(means.len(), side * side);
        let nn: Vec<f64> = means
            .iter()
            .enumerate()
            .map(|(i, a)| {
                means
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let spread = nn.iter().copied().fold(0.0, f64::max) - nn.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(spread <= 1e-12);
        for (k, &m) in means.iter().enumerate() {
            prop_assert_eq!(grid.nearest_mode(m), k);
        }
    }

    #[test]
    fn sample_grid_size_and_spacing(steps in 1usize..120, delta in 0.001f64..0.5, lo in -2.0f64..1.0) {
        let hi = lo + steps as f64 * delta;
        let g = SampleGrid::new((lo, hi), delta).unwrap();
        prop_assert_eq!(g.side(), steps + 1);
        prop_assert_eq!(g.len(), (steps + 1) * (steps + 1));
        for i in 1..g.side() {
            prop_assert!((g.coordinate(i) - g.coordinate(i - 1) - delta).abs() <= 1e-12);
        }
    }

    #[test]
    fn grid_budget_is_enforced(delta in 0.001f64..0.1, budget in 4u64..50_000) {
        match SampleGrid::with_budget((-1.0, 1.0), delta, budget) {
            Ok(g) => prop_assert!(g.len() as u64 <= budget),
            Err(e) => {
                let is_budget = matches!(e, jeaae_core::Error::Budget { .. });
                prop_assert!(is_budget, "{}", e);
            }
        }
    }

    #[test]
    fn apportioned_cents_sum_exactly(
        total in 1i64..100_000_000,
        weights in prop::collection::vec(0.01f64..10.0, 2..8),
    ) {
        let parts = apportion_cents(total, &weights);
        prop_assert_eq!(parts.len(), weights.len());
        prop_assert_eq!(parts.iter().sum::<i64>(), total);
    }

    #[test]
    fn benford_shares_sum_to_one(amounts in prop::collection::vec(0.01f64..1e7, 100..300)) {
        let r = benford_from_amounts(&amounts, 15.507).unwrap();
        prop_assert!((r.observed.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!((r.expected.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn anonymisation_preserves_equality(seed in any::<u64>(), salt in "[a-z]{0,8}") {
        let ds = synth_generate(&desk_spec(), 60, seed).unwrap();
        let anon = anonymize(&ds, &salt);
        for a in &ds.schema.categorical {
            let text = |d: &Dataset, i: usize| d.entries[i].value_text(&d.schema, &a.name).unwrap();
            let anon_name = &anon.schema.categorical[ds.schema.categorical_index(&a.name).unwrap()].name;
            for i in 0..ds.len() {
                for j in (i + 1)..ds.len() {
                    let same = text(&ds, i) == text(&ds, j);
                    let anon_i = anon.entries[i].value_text(&anon.schema, anon_name).unwrap();
                    let anon_j = anon.entries[j].value_text(&anon.schema, anon_name).unwrap();
                    prop_assert_eq!(same, anon_i == anon_j);
                }
            }
        }
    }

    #[test]
    fn regions_are_sound(seed in 0u64..1_000, k in 0usize..9, threshold in 0.0f64..1.0) {
        let (_, model) = small_model(seed);
        let grid = SampleGrid::new(model.prior.bounds(), 0.05).unwrap();
        let region = adversarial_region(&model, &grid, k, threshold).unwrap();
        for &m in &region.members {
            let z = grid.point(m);
            prop_assert!(model.discriminate(z).unwrap() >= threshold);
            prop_assert_eq!(model.prior.nearest_mode(z), k);
        }
        if let Some(mode) = region.mode {
            prop_assert!(region.members.contains(&mode));
        }
    }

    #[test]
    fn maps_are_pure_and_boundaries_exact(seed in 0u64..1_000, attr in 0usize..6) {
        let (ds, model) = small_model(seed);
        let grid = SampleGrid::new(model.prior.bounds(), 0.1).unwrap();
        let name = &ds.schema.categorical[attr].name;
        let a = combination_map(&model, &grid, name).unwrap();
        prop_assert_eq!(&a, &combination_map(&model, &grid, name).unwrap());
        let brute: Vec<usize> = (0..grid.len())
            .filter(|&i| grid.neighbors(i).any(|n| a.labels[n] != a.labels[i]))
            .collect();
        prop_assert_eq!(&a.boundary, &brute);
        let r = robustness_map(&model, &grid, 0.05).unwrap();
        prop_assert!(r.values.iter().all(|&d| d > 0.0 && d < 1.0));
        prop_assert_eq!(r, robustness_map(&model, &grid, 0.05).unwrap());
    }

    #[test]
    fn one_epoch_takes_equal_phase_steps(n in 1usize..400, batch in 1usize..200) {
        let ds = synth_generate(&desk_spec(), n.max(2), 3).unwrap();
        let cfg = AAEConfig {
            batch_size: batch,
            ..AAEConfig::desk()
        };
        let mut t = Trainer::new(&ds, cfg).unwrap();
        let stats = t.train_epoch().unwrap();
        let expected = ds.len().div_ceil(batch);
        prop_assert_eq!(stats.reconstruction_steps, expected);
        prop_assert_eq!(stats.regularization_steps, expected);
    }
}

#[test]
fn benford_first_digit_one_is_log10_two() {
    assert_eq!(benford_expected()[0], 2f64.log10());
}
