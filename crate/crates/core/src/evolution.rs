//! Generational genetic algorithm over [`Chromosome`]s.
//!
//! Each generation builds an offspring pool from tournament-selected parents
//! (crossover yields two children, mutation one), evaluates it, and replaces
//! the whole population with it. The best chromosome seen in any generation is
//! tracked separately.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::genome::{Chromosome, Gene, SearchSpace};
use crate::nn::LossKind;
use crate::params::GaParams;
use crate::seed;
use crate::Rng;

/// Assigns a fitness (lower is better, `INFINITY` for penalised) to a
/// chromosome. Must be a pure function of its arguments.
pub trait Evaluator: Sync {
    fn fitness(&self, chromosome: &Chromosome, sub_seed: u64) -> f64;
}

impl<F> Evaluator for F
where
    F: Fn(&Chromosome, u64) -> f64 + Sync,
{
    fn fitness(&self, chromosome: &Chromosome, sub_seed: u64) -> f64 {
        self(chromosome, sub_seed)
    }
}

/// Samples `k` members with replacement and returns the index of the fittest;
/// ties are broken uniformly at random among the tied draws.
pub fn tournament_select(members: &[Chromosome], k: usize, rng: &mut Rng) -> usize {
    assert!(!members.is_empty(), "cannot select from an empty population");
    let mut best = rng.random_range(0..members.len());
    let mut ties = 1u32;
    for _ in 1..k {
        let i = rng.random_range(0..members.len());
        let (f, b) = (members[i].fitness, members[best].fitness);
        if f < b {
            best = i;
            ties = 1;
        } else if f == b {
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                best = i;
            }
        }
    }
    best
}

/// Swaps one gene between copies of the parents.
pub fn crossover_at(p1: &Chromosome, p2: &Chromosome, gene: Gene) -> (Chromosome, Chromosome) {
    let (mut o1, mut o2) = (p1.clone(), p2.clone());
    match gene {
        Gene::Loss => std::mem::swap(&mut o1.loss, &mut o2.loss),
        Gene::Units => std::mem::swap(&mut o1.units, &mut o2.units),
        Gene::Activation => std::mem::swap(&mut o1.activation, &mut o2.activation),
        Gene::Configuration => std::mem::swap(&mut o1.configuration, &mut o2.configuration),
    }
    o1.fitness = f64::INFINITY;
    o2.fitness = f64::INFINITY;
    (o1, o2)
}

/// One-gene crossover at a uniformly chosen position.
pub fn crossover(p1: &Chromosome, p2: &Chromosome, rng: &mut Rng) -> (Chromosome, Chromosome) {
    let gene = Gene::ALL[rng.random_range(0..Gene::ALL.len())];
    crossover_at(p1, p2, gene)
}

pub fn mutate_gene(parent: &Chromosome, gene: Gene, space: &SearchSpace, rng: &mut Rng) -> Chromosome {
    let mut child = parent.clone();
    space.redraw(&mut child, gene, rng);
    child.fitness = f64::INFINITY;
    child
}

/// Redraws one uniformly chosen gene.
pub fn mutate(parent: &Chromosome, space: &SearchSpace, rng: &mut Rng) -> Chromosome {
    let gene = Gene::ALL[rng.random_range(0..Gene::ALL.len())];
    mutate_gene(parent, gene, space, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Crossover,
    Mutation,
}

/// A child together with the population indices of its parents.
#[derive(Debug, Clone)]
pub struct Offspring {
    pub chromosome: Chromosome,
    pub operator: Operator,
    pub parents: Vec<usize>,
}

/// Builds exactly `params.population_size` unevaluated offspring.
pub fn breed(members: &[Chromosome], params: &GaParams, space: &SearchSpace, rng: &mut Rng) -> Vec<Offspring> {
    let target = params.population_size;
    let mut pool = Vec::with_capacity(target + 1);
    while pool.len() < target {
        if rng.random_bool(params.crossover_rate) {
            let a = tournament_select(members, params.tournament_size, rng);
            let b = tournament_select(members, params.tournament_size, rng);
            let (o1, o2) = crossover(&members[a], &members[b], rng);
            for chromosome in [o1, o2] {
                pool.push(Offspring {
                    chromosome,
                    operator: Operator::Crossover,
                    parents: vec![a, b],
                });
            }
        } else {
            let a = tournament_select(members, params.tournament_size, rng);
            pool.push(Offspring {
                chromosome: mutate(&members[a], space, rng),
                operator: Operator::Mutation,
                parents: vec![a],
            });
        }
    }
    pool.truncate(target);
    pool
}

/// Evaluates every chromosome, in parallel on the current rayon pool. The
/// `i`-th chromosome of `generation` always gets the same sub-seed.
pub fn evaluate_all(chromosomes: &mut [Chromosome], evaluator: &dyn Evaluator, run_seed: u64, generation: usize) {
    chromosomes.par_iter_mut().enumerate().for_each(|(i, c)| {
        c.fitness = evaluator.fitness(c, seed::evaluation_seed(run_seed, generation, i));
    });
}

#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Chromosome>,
    /// Fittest chromosome over all generations so far.
    pub best: Option<Chromosome>,
}

impl Population {
    fn absorb_best(&mut self) {
        for c in &self.members {
            let better = match &self.best {
                None => true,
                Some(b) => c.fitness < b.fitness,
            };
            if better {
                self.best = Some(c.clone());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Over finite fitness values only; `None` when there are none.
    pub min_fitness: Option<f64>,
    pub mean_fitness: Option<f64>,
    pub finite_count: usize,
    pub cce_count: usize,
    pub mse_count: usize,
    pub best_so_far: Option<f64>,
}

impl GenerationStats {
    fn of(generation: usize, population: &Population) -> Self {
        let finite: Vec<f64> = population
            .members
            .iter()
            .map(|c| c.fitness)
            .filter(|f| f.is_finite())
            .collect();
        let count = |loss| population.members.iter().filter(|c| c.loss == loss).count();
        Self {
            generation,
            min_fitness: finite.iter().copied().reduce(f64::min),
            mean_fitness: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
            finite_count: finite.len(),
            cce_count: count(LossKind::Cce),
            mse_count: count(LossKind::Mse),
            best_so_far: population.best.as_ref().map(|b| b.fitness).filter(|f| f.is_finite()),
        }
    }
}

/// Breeds, evaluates and fully replaces `population`.
pub fn next_generation(
    population: &Population,
    params: &GaParams,
    space: &SearchSpace,
    evaluator: &dyn Evaluator,
    run_seed: u64,
    generation: usize,
    rng: &mut Rng,
) -> Population {
    let mut members: Vec<Chromosome> = breed(&population.members, params, space, rng)
        .into_iter()
        .map(|o| o.chromosome)
        .collect();
    evaluate_all(&mut members, evaluator, run_seed, generation);
    let mut next = Population {
        members,
        best: population.best.clone(),
    };
    next.absorb_best();
    next
}

#[derive(Debug, Clone)]
pub struct GaRun {
    pub best: Option<Chromosome>,
    /// One entry for the initial population, then one per generation.
    pub history: Vec<GenerationStats>,
    pub evaluations: usize,
    /// Minimum fitness over every evaluation performed.
    pub min_fitness_seen: f64,
}

/// Runs the full generational loop.
pub fn run_ga(space: &SearchSpace, params: &GaParams, evaluator: &dyn Evaluator, run_seed: u64) -> GaRun {
    let mut rng = seed::rng(seed::derive(run_seed, &[seed::GA_STREAM]));
    let mut members: Vec<Chromosome> = (0..params.population_size)
        .map(|_| space.random_chromosome(&mut rng))
        .collect();
    evaluate_all(&mut members, evaluator, run_seed, 0);

    let mut population = Population { members, best: None };
    population.absorb_best();
    let mut min_seen = population.members.iter().map(|c| c.fitness).fold(f64::INFINITY, f64::min);
    let mut evaluations = population.members.len();
    let mut history = vec![GenerationStats::of(0, &population)];
    log::info!("generation 0: {:?}", history[0]);

    for generation in 1..=params.generations {
        population = next_generation(&population, params, space, evaluator, run_seed, generation, &mut rng);
        evaluations += population.members.len();
        min_seen = population.members.iter().map(|c| c.fitness).fold(min_seen, f64::min);
        let stats = GenerationStats::of(generation, &population);
        log::info!("generation {generation}: {stats:?}");
        history.push(stats);
    }

    GaRun {
        best: population.best,
        history,
        evaluations,
        min_fitness_seen: min_seen,
    }
}
