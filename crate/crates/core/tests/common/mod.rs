#![allow(dead_code)]

use std::collections::BTreeSet;

use probident::data::InputShape;
use probident::evolution::{run_ga, GaRun};
use probident::genome::{build_network, plan_network, Chromosome, LayerCode, SearchSpace};
use probident::nn::{Activation, LayerKind, LossKind, Mode, Network, Tensor};
use probident::params::{GaParams, NnParams};
use probident::{seed, Rng};
use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;
/// Denominator floor for the relative error, so gradients that are zero up to
/// rounding compare on absolute error instead.
pub const FD_FLOOR: f64 = 1e-6;

pub struct GradientCase {
    pub network: Network,
    pub x: Tensor,
    pub y: Tensor,
    pub dropout_seed: u64,
}

impl GradientCase {
    fn loss(&self) -> f64 {
        let mut rng = seed::rng(self.dropout_seed);
        let out = self.network.forward(&self.x, Mode::Training(&mut rng)).unwrap();
        self.network.loss_kind().loss(&self.y, &out).unwrap()
    }

    /// Worst relative error between backprop and central differences.
    pub fn worst_error(&mut self) -> f64 {
        let mut rng = seed::rng(self.dropout_seed);
        let (_, analytic) = self
            .network
            .loss_and_gradients(&self.x, &self.y, Some(&mut rng))
            .unwrap();
        let mut worst = 0.0f64;
        for (p, grad) in analytic.iter().enumerate() {
            for j in 0..grad.len() {
                let original = self.network.params()[p].data()[j];
                self.network.params_mut()[p].data_mut()[j] = original + FD_STEP;
                let plus = self.loss();
                self.network.params_mut()[p].data_mut()[j] = original - FD_STEP;
                let minus = self.loss();
                self.network.params_mut()[p].data_mut()[j] = original;
                let numeric = (plus - minus) / (2.0 * FD_STEP);
                let a = grad.data()[j];
                let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_FLOOR);
                worst = worst.max(err);
            }
        }
        worst
    }
}

fn small_nn() -> NnParams {
    NnParams {
        hidden_units: 3,
        conv_filters: 2,
        ..NnParams::default()
    }
}

/// Random valid networks of at most 500 parameters. Alternates input kind and
/// loss, and keeps drawing until every layer kind has appeared.
pub fn gradient_cases(min_count: usize, seed_value: u64) -> Vec<GradientCase> {
    let mut rng = seed::rng(seed_value);
    let nn = small_nn();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut cases = Vec::new();
    let mut kinds = BTreeSet::new();
    let all_kinds = 6;
    let mut i = 0usize;
    while cases.len() < min_count || kinds.len() < all_kinds {
        assert!(i < 10_000, "could not generate enough valid networks");
        let image = i.is_multiple_of(2);
        let loss = if (i / 2).is_multiple_of(2) { LossKind::Mse } else { LossKind::Cce };
        i += 1;
        let input = if image {
            InputShape::Image {
                height: 5,
                width: 5,
                channels: rng.random_range(1..=2),
            }
        } else {
            InputShape::Flat {
                features: rng.random_range(2..=6),
            }
        };
        let (units, activation) = match loss {
            LossKind::Cce => (
                rng.random_range(2..=4),
                *[Activation::Softmax, Activation::Sigmoid].choose(&mut rng).unwrap(),
            ),
            LossKind::Mse => (rng.random_range(1..=3), *Activation::ALL.choose(&mut rng).unwrap()),
        };
        let space = SearchSpace::new(units, input);
        let c = Chromosome::new(loss, units, activation, space.random_configuration(&mut rng));
        let Ok(specs) = plan_network(&c, &input, &nn) else {
            continue;
        };
        if specs.iter().map(|s| s.param_count()).sum::<usize>() > 500 {
            continue;
        }
        let mut network = Network::from_specs(&input.dims(), &specs, loss, nn.init, &mut rng).unwrap();
        // Zero biases put dead units exactly on the relu kink; check at a generic point.
        for p in network.params_mut() {
            for v in p.data_mut() {
                *v = 0.5 * normal.sample(&mut rng);
            }
        }
        let n = 4;
        let mut x_shape = vec![n];
        x_shape.extend(input.dims());
        let x_len = x_shape.iter().product();
        let x = Tensor::new(x_shape, (0..x_len).map(|_| normal.sample(&mut rng)).collect()).unwrap();
        let y = match loss {
            LossKind::Cce => {
                let mut y = vec![0.0; n * units];
                for r in 0..n {
                    y[r * units + rng.random_range(0..units)] = 1.0;
                }
                Tensor::new(vec![n, units], y).unwrap()
            }
            LossKind::Mse => Tensor::new(vec![n, units], (0..n * units).map(|_| normal.sample(&mut rng)).collect()).unwrap(),
        };
        kinds.extend(network.layer_kinds());
        cases.push(GradientCase {
            network,
            x,
            y,
            dropout_seed: rng.random(),
        });
    }
    cases
}

pub fn layer_kind_coverage(cases: &[GradientCase]) -> BTreeSet<LayerKind> {
    cases.iter().flat_map(|c| c.network.layer_kinds()).collect()
}

/// Winning chromosomes for known benchmark datasets, with each
/// dataset's input geometry and unique-target count.
pub struct WinnerEntry {
    pub dataset: &'static str,
    pub text: &'static str,
    pub input: InputShape,
    pub unique_targets: usize,
}

const fn flat(features: usize) -> InputShape {
    InputShape::Flat { features }
}

const fn image(height: usize, width: usize, channels: usize) -> InputShape {
    InputShape::Image {
        height,
        width,
        channels,
    }
}

pub const BENCHMARK_WINNERS: [WinnerEntry; 16] = [
    WinnerEntry {
        dataset: "Aloi",
        text: "Units: 1000, Loss: CCE, Activation: linear, Configuration:  [2, 1, 1, 2, 1]",
        input: flat(128),
        unique_targets: 1000,
    },
    WinnerEntry {
        dataset: "Isolet5",
        text: "Units: 1, Loss: MSE, Activation: softmax, Configuration: [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]",
        input: flat(617),
        unique_targets: 26,
    },
    WinnerEntry {
        dataset: "Letter Recognition",
        text: "Units: 26, Loss: CCE, Activation: sigmoid, Configuration: [1, 2, 2, 1, 2, 2, 1, 1, 2, 1, 1]",
        input: flat(16),
        unique_targets: 26,
    },
    WinnerEntry {
        dataset: "Sensorless Drive",
        text: "Units: 11, Loss: CCE, Activation: relu, Configuration:  [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]",
        input: flat(48),
        unique_targets: 11,
    },
    WinnerEntry {
        dataset: "Year Prediction",
        text: "Units: 64, Loss: CCE, Activation: sotmax, Configuration: [1, 2, 2, 2, 1, 2, 2, 1, 2, 2, 1]",
        input: flat(90),
        unique_targets: 89,
    },
    WinnerEntry {
        dataset: "Boston Housing",
        text: "Units: 1, Loss: MSE, Activation: softmax, Configuration:  [2, 1, 1, 2, 1, 1, 1, 1, 2, 1]",
        input: flat(13),
        unique_targets: 506,
    },
    WinnerEntry {
        dataset: "CCPP",
        text: "Units: 1, Loss: MSE, Activation: softmax, Configuration:  [1, 2, 2, 2, 1, 1, 1, 1, 2, 2, 1]",
        input: flat(4),
        unique_targets: 4837,
    },
    WinnerEntry {
        dataset: "Concrete Comp",
        text: "Units: 1, Loss: MSE, Activation: softmax, Configuration:  [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]",
        input: flat(15),
        unique_targets: 1030,
    },
    WinnerEntry {
        dataset: "Forest Fire",
        text: "Units: 1, Loss: MSE, Activation: softmax, Configuration:  [1, 2, 2, 2, 1, 1, 2, 2, 1, 2, 2, 2, 1, 1, 2, 1]",
        input: flat(29),
        unique_targets: 17380,
    },
    WinnerEntry {
        dataset: "Physicochemical",
        text: "Units: 1, Loss: MSE, Activation: softmax, Configuration: [1, 1, 1, 2, 2, 1, 1, 2, 1, 1, 1, 1, 1, 2, 1]",
        input: flat(9),
        unique_targets: 15903,
    },
    WinnerEntry {
        dataset: "Relative CT Slice",
        text: "Units: 1, Loss: MSE, Activation: softmax, Configuration: [1, 2, 1, 1, 2, 1, 1]",
        input: flat(384),
        unique_targets: 2001,
    },
    WinnerEntry {
        dataset: "CIFAR-10",
        text: "Units: 10, Loss: CCE, Activation: linear, Configuration:  [3, 3, 0, 0, 2, 3, 3, 0, 0, 0, 1]",
        input: image(32, 32, 3),
        unique_targets: 10,
    },
    WinnerEntry {
        dataset: "CIFAR-100",
        text: "Units: 100, Loss: CCE , Activation: sigmoid, Configuration:  [2, 0, 3, 3, 0, 0, 1, 2, 1, 1, 1]",
        input: image(32, 32, 3),
        unique_targets: 100,
    },
    WinnerEntry {
        dataset: "MNIST",
        text: "Units: 10, Loss: CCE, Activation: relu, Configuration: [2, 0, 2, 0, 3, 0, 1]",
        input: image(28, 28, 1),
        unique_targets: 10,
    },
    WinnerEntry {
        dataset: "CrowdFlower",
        text: "Units: 13, Loss: CCE, Activation: sigmoid, Configuration:  [1, 2, 1, 1, 1, 2, 2, 1, 2, 2, 1, 1, 1, 2, 1]",
        input: flat(1000),
        unique_targets: 13,
    },
    WinnerEntry {
        dataset: "IMDB",
        text: "Units: 2, Loss: CCE, Activation: softmax, Configuration:  [2, 1, 2, 1, 2, 1]",
        input: flat(10000),
        unique_targets: 2,
    },
];

/// One fixture text has a misspelt activation name.
pub fn normalise_fixture(text: &str) -> String {
    text.replace("sotmax", "softmax")
}

/// Checks one benchmark winner.
pub fn check_winner(entry: &WinnerEntry) -> Result<(), String> {
    let c: Chromosome = normalise_fixture(entry.text)
        .parse()
        .map_err(|e| format!("{}: {e}", entry.dataset))?;
    let again: Chromosome = c.to_string().parse().map_err(|e| format!("{}: {e}", entry.dataset))?;
    if !again.same_genes(&c) {
        return Err(format!("{}: render/parse round trip changed the genes", entry.dataset));
    }
    let network = build_network(&c, &entry.input, &NnParams::default(), &mut rng(0))
        .map_err(|e| format!("{}: {e}", entry.dataset))?;
    let kinds = network.layer_kinds();
    if kinds.last() != Some(&LayerKind::OutputDense) || network.output_units() != c.units {
        return Err(format!("{}: output layer does not match the chromosome", entry.dataset));
    }
    if entry.input.is_image() != kinds.contains(&LayerKind::Flatten) {
        return Err(format!("{}: flatten placement does not match input kind", entry.dataset));
    }
    Ok(())
}

/// Layer codes of an example CIFAR-10 network.
pub const CIFAR_EXAMPLE_CODES: [u8; 10] = [2, 0, 3, 3, 0, 0, 1, 2, 1, 1];
pub const CIFAR_EXAMPLE_KINDS: [LayerKind; 12] = [
    LayerKind::Dropout,
    LayerKind::Convolution,
    LayerKind::MaxPooling,
    LayerKind::MaxPooling,
    LayerKind::Convolution,
    LayerKind::Convolution,
    LayerKind::Flatten,
    LayerKind::FullyConnected,
    LayerKind::Dropout,
    LayerKind::FullyConnected,
    LayerKind::FullyConnected,
    LayerKind::OutputDense,
];

pub fn codes(v: &[u8]) -> Vec<LayerCode> {
    v.iter().map(|&c| LayerCode::try_from(c).unwrap()).collect()
}

/// Fitness is the number of fully-connected codes in the configuration.
pub fn count_fc(c: &Chromosome, _sub_seed: u64) -> f64 {
    c.configuration
        .iter()
        .filter(|&&code| code == LayerCode::FullyConnected)
        .count() as f64
}

pub fn stub_run(run_seed: u64) -> GaRun {
    let space = SearchSpace::new(10, image(8, 8, 1));
    run_ga(&space, &GaParams::default(), &count_fc, run_seed)
}

pub fn rng(seed_value: u64) -> Rng {
    seed::rng(seed_value)
}

/// Upper 1% points of the chi-square distribution for 1 to 4 degrees of freedom.
pub const CHI2_CRITICAL_1PCT: [f64; 4] = [6.634896601021214, 9.210340371976182, 11.344866730144373, 13.276704135987622];

pub fn chi_square(observed: &[usize], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum()
}

pub fn random_members(space: &SearchSpace, n: usize, rng: &mut Rng) -> Vec<Chromosome> {
    (0..n).map(|_| space.random_chromosome(rng)).collect()
}

/// The pair's gene values, order-insensitive per gene.
fn gene_pool(a: &Chromosome, b: &Chromosome) -> (Vec<String>, Vec<usize>, Vec<String>, Vec<Vec<LayerCode>>) {
    let sorted = |mut v: Vec<String>| {
        v.sort();
        v
    };
    let mut units = vec![a.units, b.units];
    units.sort();
    let mut configs = vec![a.configuration.clone(), b.configuration.clone()];
    configs.sort_by_key(|c| c.iter().map(|&x| u8::from(x)).collect::<Vec<_>>());
    (
        sorted(vec![a.loss.to_string(), b.loss.to_string()]),
        units,
        sorted(vec![a.activation.to_string(), b.activation.to_string()]),
        configs,
    )
}

/// Every crossover swaps exactly the chosen gene and conserves the parents'
/// gene values.
pub fn check_crossover_conservation(trials: usize, seed_value: u64) -> Result<(), String> {
    use probident::evolution::{crossover, crossover_at};
    use probident::genome::Gene;
    let space = SearchSpace::new(7, image(6, 6, 1));
    let mut rng = rng(seed_value);
    for t in 0..trials {
        let (p1, p2) = (space.random_chromosome(&mut rng), space.random_chromosome(&mut rng));
        for gene in Gene::ALL {
            let (o1, o2) = crossover_at(&p1, &p2, gene);
            for other in Gene::ALL {
                let swapped = other == gene;
                let ok1 = if swapped { !o1.gene_differs(&p2, other) } else { !o1.gene_differs(&p1, other) };
                let ok2 = if swapped { !o2.gene_differs(&p1, other) } else { !o2.gene_differs(&p2, other) };
                if !(ok1 && ok2) {
                    return Err(format!("trial {t}: crossover at {gene:?} mishandled {other:?}"));
                }
            }
        }
        let (o1, o2) = crossover(&p1, &p2, &mut rng);
        if gene_pool(&p1, &p2) != gene_pool(&o1, &o2) {
            return Err(format!("trial {t}: crossover did not conserve gene values"));
        }
        let changed = Gene::ALL
            .iter()
            .filter(|&&g| o1.gene_differs(&p1, g) || o2.gene_differs(&p2, g))
            .count();
        if changed > 1 {
            return Err(format!("trial {t}: crossover changed {changed} genes"));
        }
        if o1.fitness.is_finite() || o2.fitness.is_finite() {
            return Err("offspring must start unevaluated".into());
        }
    }
    Ok(())
}

/// A mutant differs from its parent in at most one gene.
pub fn check_mutation_single_gene(trials: usize, seed_value: u64) -> Result<(), String> {
    use probident::evolution::mutate;
    use probident::genome::Gene;
    for space in [SearchSpace::new(7, image(6, 6, 1)), SearchSpace::new(300, flat(12))] {
        let mut rng = rng(seed_value);
        for t in 0..trials {
            let parent = space.random_chromosome(&mut rng);
            let child = mutate(&parent, &space, &mut rng);
            let changed = Gene::ALL.iter().filter(|&&g| child.gene_differs(&parent, g)).count();
            if changed > 1 {
                return Err(format!("trial {t}: mutation changed {changed} genes"));
            }
            let len = child.configuration.len();
            if !(5..=15).contains(&len) || !child.configuration.iter().all(|c| space.layer_codes().contains(c)) {
                return Err(format!("trial {t}: mutant configuration outside the search space"));
            }
            if child.units != 1 && child.units != space.unique_targets {
                return Err(format!("trial {t}: mutant units {} outside {{1, U}}", child.units));
            }
        }
    }
    Ok(())
}

fn with_fitness(values: &[f64]) -> Vec<Chromosome> {
    values
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let mut c = Chromosome::new(LossKind::Mse, i + 1, Activation::Linear, codes(&[1, 1, 1, 1, 1]));
            c.fitness = f;
            c
        })
        .collect()
}

/// With distinct fitness values the winner is the fittest of the sampled
/// candidates, replayed from a cloned generator.
pub fn check_tournament_minimum(trials: usize, seed_value: u64) -> Result<(), String> {
    use probident::evolution::tournament_select;
    let mut rng = rng(seed_value);
    for t in 0..trials {
        let n = rng.random_range(1..20);
        let k = rng.random_range(1..8);
        let values: Vec<f64> = (0..n).map(|i| i as f64 * 1.5 + 0.25).collect();
        let mut members = with_fitness(&values);
        members.reverse();
        // Replay the candidate draws. A repeated candidate ties with itself
        // and consumes one extra draw for the tie-break.
        let mut replay = rng.clone();
        let mut drawn = vec![replay.random_range(0..n)];
        let mut ties = 1;
        for _ in 1..k {
            let i = replay.random_range(0..n);
            let best = *drawn
                .iter()
                .min_by(|&&a, &&b| members[a].fitness.total_cmp(&members[b].fitness))
                .unwrap();
            if members[i].fitness < members[best].fitness {
                ties = 1;
            } else if i == best {
                ties += 1;
                replay.random_range(0..ties);
            }
            drawn.push(i);
        }
        let expected = *drawn
            .iter()
            .min_by(|&&a, &&b| members[a].fitness.total_cmp(&members[b].fitness))
            .unwrap();
        let got = tournament_select(&members, k, &mut rng);
        if got != expected {
            return Err(format!("trial {t}: selected {got}, fittest sampled was {expected}"));
        }
    }
    // a full-size tournament almost always contains the global minimum
    let members = with_fitness(&[3.0, 0.5, 2.0, f64::INFINITY]);
    let hits = (0..1000)
        .filter(|_| tournament_select(&members, 40, &mut rng) == 1)
        .count();
    if hits < 999 {
        return Err(format!("global minimum won only {hits}/1000 large tournaments"));
    }
    Ok(())
}

/// Chi-square statistics for the winner among tied candidates, over `draws`
/// tournaments: one with every member tied, one with three tied minima.
pub fn tie_uniformity(draws: usize, seed_value: u64) -> [(f64, f64); 2] {
    use probident::evolution::tournament_select;
    let mut rng = rng(seed_value);

    let all_tied = with_fitness(&[1.0; 5]);
    let mut counts = [0usize; 5];
    for _ in 0..draws {
        counts[tournament_select(&all_tied, 5, &mut rng)] += 1;
    }
    let stat_all = chi_square(&counts, &[draws as f64 / 5.0; 5]);

    let three_tied = with_fitness(&[2.0, 1.0, 7.0, 1.0, 1.0, f64::INFINITY]);
    let mut counts = [0usize; 3];
    let mut total = 0;
    for _ in 0..draws {
        match tournament_select(&three_tied, 5, &mut rng) {
            1 => counts[0] += 1,
            3 => counts[1] += 1,
            4 => counts[2] += 1,
            _ => continue,
        }
        total += 1;
    }
    let stat_three = chi_square(&counts, &[total as f64 / 3.0; 3]);
    [(stat_all, CHI2_CRITICAL_1PCT[3]), (stat_three, CHI2_CRITICAL_1PCT[1])]
}
