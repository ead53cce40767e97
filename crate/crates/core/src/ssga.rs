//! Steady-state genetic algorithm.
//!
//! Each generation samples a tournament of `k` distinct individuals, breeds
//! the best two with single-point crossover and Gaussian mutation, evaluates
//! the two children one after the other and writes them over the two worst
//! tournament members (child 1 over the worst). There is no elitism; the best
//! individual ever evaluated is tracked on the side.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded, TrialRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub tournament: usize,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Standard deviation of the Gaussian mutation noise.
    pub mutation_scale: f64,
    pub generations: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 100,
            tournament: 5,
            mutation_rate: 0.003,
            mutation_scale: 0.5,
            generations: 5000,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tournament < 2 || self.tournament > self.population {
            return Err(Error::Config(format!(
                "tournament size must satisfy 2 <= k <= N, got k={} N={}",
                self.tournament, self.population
            )));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::Config(format!(
                "mutation rate must lie in [0, 1], got {}",
                self.mutation_rate
            )));
        }
        if !(self.mutation_scale.is_finite() && self.mutation_scale > 0.0) {
            return Err(Error::Config(format!(
                "mutation scale must be positive, got {}",
                self.mutation_scale
            )));
        }
        Ok(())
    }
}

/// Anything that scores a gene vector. Higher is better.
pub trait Evaluator {
    fn evaluate(&mut self, genes: &[f64]) -> Result<f64>;
}

impl<F> Evaluator for F
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    fn evaluate(&mut self, genes: &[f64]) -> Result<f64> {
        self(genes)
    }
}

fn checked_fitness(f: f64) -> Result<f64> {
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::Evaluation(format!("evaluator returned {f}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    /// Creation order; lower ids win fitness ties.
    pub id: u64,
    pub genes: Vec<f64>,
    pub fitness: f64,
}

impl Individual {
    /// True if `self` ranks ahead of `other`.
    fn beats(&self, other: &Individual) -> bool {
        self.fitness > other.fitness || (self.fitness == other.fitness && self.id < other.id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: Vec<Individual>,
    next_id: u64,
}

impl Population {
    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> &Individual {
        self.members
            .iter()
            .reduce(|a, b| if b.beats(a) { b } else { a })
            .expect("population is never empty")
    }

    fn spawn(&mut self, genes: Vec<f64>, fitness: f64) -> Individual {
        let id = self.next_id;
        self.next_id += 1;
        Individual { id, genes, fitness }
    }
}

/// `N` chromosomes with genes uniform on `[-1, 1]`, each evaluated once in
/// creation order.
pub fn init_population<E: Evaluator>(
    cfg: &GaConfig,
    genome_len: usize,
    evaluator: &mut E,
    rng: &mut TrialRng,
) -> Result<Population> {
    cfg.validate()?;
    if genome_len < 2 {
        return Err(Error::Config("chromosomes need at least two genes".into()));
    }
    let mut pop = Population {
        members: Vec::with_capacity(cfg.population),
        next_id: 0,
    };
    for _ in 0..cfg.population {
        let genes: Vec<f64> = (0..genome_len)
            .map(|_| rng.random_range(-1.0..=1.0))
            .collect();
        let fitness = checked_fitness(evaluator.evaluate(&genes)?)?;
        let ind = pop.spawn(genes, fitness);
        pop.members.push(ind);
    }
    Ok(pop)
}

/// Samples `k` distinct members uniformly and returns their indices ordered
/// best first (ties to the lower id).
pub fn tournament<R: Rng + ?Sized>(pop: &Population, k: usize, rng: &mut R) -> Vec<usize> {
    let mut picked = index::sample(rng, pop.len(), k).into_vec();
    let m = &pop.members;
    picked.sort_by(|&a, &b| {
        m[b].fitness
            .total_cmp(&m[a].fitness)
            .then(m[a].id.cmp(&m[b].id))
    });
    picked
}

/// Exchanges the tails of `a` and `b` after position `cut`.
pub fn crossover_at(a: &[f64], b: &[f64], cut: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "crossover parents differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if cut == 0 || cut >= a.len() {
        return Err(Error::InvalidParameter(format!(
            "cut point {cut} outside 1..{}",
            a.len()
        )));
    }
    let c1 = [&a[..cut], &b[cut..]].concat();
    let c2 = [&b[..cut], &a[cut..]].concat();
    Ok((c1, c2))
}

/// Single-point crossover with the cut drawn uniformly from `1..L`.
pub fn crossover<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "crossover parents differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Contract("crossover needs at least two genes".into()));
    }
    let cut = rng.random_range(1..a.len());
    crossover_at(a, b, cut)
}

/// Adds `N(0, scale)` noise to each gene independently with probability
/// `rate`. Genes are not clamped.
pub fn mutate<R: Rng + ?Sized>(
    mut genes: Vec<f64>,
    rate: f64,
    scale: f64,
    rng: &mut R,
) -> Vec<f64> {
    let noise = Normal::new(0.0, scale).expect("mutation scale is validated positive");
    for g in &mut genes {
        if rng.random::<f64>() < rate {
            *g += noise.sample(rng);
        }
    }
    genes
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub offspring: [f64; 2],
    pub best_so_far: f64,
}

/// A running steady-state GA. Strictly sequential: every generation depends
/// on the evaluations of the one before it.
pub struct Ssga<E> {
    cfg: GaConfig,
    population: Population,
    best: Individual,
    evaluator: E,
    rng: TrialRng,
    generation: usize,
    evaluations: u64,
}

impl<E: Evaluator> Ssga<E> {
    /// Builds and evaluates the initial population.
    pub fn new(
        cfg: GaConfig,
        genome_len: usize,
        mut evaluator: E,
        mut rng: TrialRng,
    ) -> Result<Self> {
        let population = init_population(&cfg, genome_len, &mut evaluator, &mut rng)?;
        let best = population.best().clone();
        Ok(Self {
            evaluations: cfg.population as u64,
            cfg,
            population,
            best,
            evaluator,
            rng,
            generation: 0,
        })
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn best(&self) -> &Individual {
        &self.best
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn evaluator(&self) -> &E {
        &self.evaluator
    }

    /// One tournament, two children, two replacements. If the evaluator
    /// fails the population is left as it was.
    pub fn step(&mut self) -> Result<GenerationRecord> {
        let ranked = tournament(&self.population, self.cfg.tournament, &mut self.rng);
        let (p1, p2) = (
            &self.population.members[ranked[0]],
            &self.population.members[ranked[1]],
        );
        let (c1, c2) = crossover(&p1.genes, &p2.genes, &mut self.rng)?;

        let mut children = Vec::with_capacity(2);
        for genes in [c1, c2] {
            let genes = mutate(
                genes,
                self.cfg.mutation_rate,
                self.cfg.mutation_scale,
                &mut self.rng,
            );
            let fitness = checked_fitness(self.evaluator.evaluate(&genes)?)?;
            self.evaluations += 1;
            children.push((genes, fitness));
        }

        let k = ranked.len();
        let mut offspring = [0.0; 2];
        for (i, (genes, fitness)) in children.into_iter().enumerate() {
            let child = self.population.spawn(genes, fitness);
            offspring[i] = fitness;
            if child.fitness > self.best.fitness {
                self.best = child.clone();
            }
            self.population.members[ranked[k - 1 - i]] = child;
        }
        self.generation += 1;
        Ok(GenerationRecord {
            generation: self.generation,
            offspring,
            best_so_far: self.best.fitness,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaRun {
    pub best: Individual,
    pub history: Vec<GenerationRecord>,
    pub evaluations: u64,
}

impl GaRun {
    pub fn best_series(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.best_so_far).collect()
    }
}

/// Initializes and runs `cfg.generations` generations on the given stream.
pub fn run_with_rng<E: Evaluator>(
    cfg: &GaConfig,
    genome_len: usize,
    evaluator: E,
    rng: TrialRng,
) -> Result<GaRun> {
    let mut ga = Ssga::new(*cfg, genome_len, evaluator, rng)?;
    let history = (0..cfg.generations)
        .map(|_| ga.step())
        .collect::<Result<Vec<_>>>()?;
    Ok(GaRun {
        best: ga.best.clone(),
        history,
        evaluations: ga.evaluations,
    })
}

/// Runs the GA seeded from `cfg.seed`.
pub fn run<E: Evaluator>(cfg: &GaConfig, genome_len: usize, evaluator: E) -> Result<GaRun> {
    run_with_rng(cfg, genome_len, evaluator, seeded(cfg.seed))
}
