use probident::data::{one_hot, standardize, TargetIndex};
use probident::nn::{Activation, LayerSpec, LossKind, Network, Tensor, WeightInit};
use probident::seed;
use proptest::prelude::*;

fn row(values: &[f64]) -> Tensor {
    Tensor::new(vec![1, values.len()], values.to_vec()).unwrap()
}

/// Max pooling through a network whose output layer is the identity.
fn pool_only(h: usize, w: usize, c: usize) -> Network {
    let (ho, wo) = (h - 1, w - 1);
    let features = ho * wo * c;
    let specs = [
        LayerSpec::MaxPooling {
            height: h,
            width: w,
            channels: c,
            window: 2,
        },
        LayerSpec::Flatten { features },
        LayerSpec::OutputDense {
            inputs: features,
            units: features,
            activation: Activation::Linear,
        },
    ];
    let mut net = Network::from_specs(
        &[h, w, c],
        &specs,
        LossKind::Mse,
        WeightInit::default(),
        &mut seed::rng(0),
    )
    .unwrap();
    let mut params = net.params_mut();
    for (i, v) in params[0].data_mut().iter_mut().enumerate() {
        *v = if i / features == i % features { 1.0 } else { 0.0 };
    }
    net
}

proptest! {
    #[test]
    fn softmax_rows_are_distributions(values in prop::collection::vec(-50.0f64..50.0, 1..8), shift in -100.0f64..100.0) {
        let p = Activation::Softmax.apply(&row(&values));
        let sum: f64 = p.data().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(p.data().iter().all(|&v| v > 0.0 && v <= 1.0));
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let q = Activation::Softmax.apply(&row(&shifted));
        for (a, b) in p.data().iter().zip(q.data()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let total: f64 = values.iter().map(|v| v.exp()).sum();
        for (a, v) in p.data().iter().zip(&values) {
            prop_assert!((a - v.exp() / total).abs() < 1e-12);
        }
    }

    #[test]
    fn max_pool_matches_brute_force(h in 2usize..6, w in 2usize..6, c in 1usize..3, seed_value in any::<u64>()) {
        use rand::Rng as _;
        let mut rng = seed::rng(seed_value);
        let x: Vec<f64> = (0..2 * h * w * c).map(|_| rng.random_range(-1.0..1.0)).collect();
        let net = pool_only(h, w, c);
        let out = net.predict(&Tensor::new(vec![2, h, w, c], x.clone()).unwrap()).unwrap();
        let at = |s: usize, i: usize, j: usize, ch: usize| x[((s * h + i) * w + j) * c + ch];
        let mut k = 0;
        for s in 0..2 {
            for i in 0..h - 1 {
                for j in 0..w - 1 {
                    for ch in 0..c {
                        let m = [at(s, i, j, ch), at(s, i + 1, j, ch), at(s, i, j + 1, ch), at(s, i + 1, j + 1, ch)]
                            .into_iter()
                            .fold(f64::NEG_INFINITY, f64::max);
                        prop_assert_eq!(out.data()[k], m);
                        k += 1;
                    }
                }
            }
        }
    }

    #[test]
    fn one_hot_round_trips(labels in prop::collection::vec(-5i32..5, 1..40)) {
        let targets: Vec<f64> = labels.iter().map(|&l| l as f64 * 0.5).collect();
        let index = TargetIndex::new(&targets);
        let encoded = one_hot(&targets, &index).unwrap();
        prop_assert_eq!(encoded.shape(), &[targets.len(), index.len()][..]);
        for (r, &t) in encoded.data().chunks(index.len()).zip(&targets) {
            prop_assert_eq!(r.iter().sum::<f64>(), 1.0);
            let hot = r.iter().position(|&v| v == 1.0).unwrap();
            prop_assert_eq!(index.values()[hot], t);
        }
        let sorted = index.values().windows(2).all(|w| w[0] < w[1]);
        prop_assert!(sorted);
    }

    #[test]
    fn standardised_training_columns_have_zero_mean_unit_std(
        rows in 2usize..30,
        cols in 1usize..5,
        seed_value in any::<u64>(),
    ) {
        use rand::Rng as _;
        let mut rng = seed::rng(seed_value);
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-100.0..100.0)).collect();
        let train = Tensor::new(vec![rows, cols], data).unwrap();
        let (t, v) = standardize(&train, &train).unwrap();
        prop_assert_eq!(t.data(), v.data());
        for j in 0..cols {
            let col: Vec<f64> = t.data().iter().skip(j).step_by(cols).copied().collect();
            let mean = col.iter().sum::<f64>() / rows as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / rows as f64;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9);
        }
    }
}
