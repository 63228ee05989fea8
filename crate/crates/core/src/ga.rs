//! Real-vector genetic algorithm for duty-cycle sequences.
//!
//! One call to [`evolve`] consumes a single [`PortableRng`] stream in a fixed
//! order (initialization, then per generation: tournaments, crossover coin,
//! mutation coins and perturbations), so results depend only on the
//! configuration, the objective, the previous duty and the seed.

use serde::{Deserialize, Serialize};

use crate::error::{PsnfError, Result};
use crate::rng::PortableRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub tournament_size: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    /// Standard deviation of the per-gene Gaussian mutation.
    pub mutation_sigma: f64,
    /// Maximum number of reproduction rounds after the initial population.
    pub generations: usize,
    /// Consecutive rounds without improvement that stop the search.
    pub stall_limit: usize,
    pub gene_lo: f64,
    pub gene_hi: f64,
    /// Spread of genes 1.. around gene 0 in the initial population.
    pub init_sigma: f64,
    /// Gene 0 is drawn from `prev + U(-w prev, w prev)` with this `w`.
    pub first_gene_halfwidth: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            tournament_size: 4,
            crossover_prob: 0.5,
            mutation_prob: 0.1,
            mutation_sigma: 0.05,
            generations: 50,
            stall_limit: 10,
            gene_lo: 0.0,
            gene_hi: 1.0,
            init_sigma: 0.05,
            first_gene_halfwidth: 0.5,
        }
    }
}

/// Improvement smaller than this does not reset the stall counter.
pub const STALL_TOLERANCE: f64 = 1e-12;

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PsnfError::InvalidParameter(m));
        if self.population_size < 2 {
            return bad(format!(
                "population_size must be >= 2, got {}",
                self.population_size
            ));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return bad(format!(
                "tournament_size must be in 1..={}, got {}",
                self.population_size, self.tournament_size
            ));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !(self.gene_lo < self.gene_hi) {
            return bad(format!(
                "empty gene bounds [{}, {}]",
                self.gene_lo, self.gene_hi
            ));
        }
        if !(self.mutation_sigma >= 0.0
            && self.init_sigma >= 0.0
            && self.first_gene_halfwidth >= 0.0)
        {
            return bad("spreads must be non-negative".into());
        }
        Ok(())
    }

    fn clamp(&self, g: f64) -> f64 {
        g.clamp(self.gene_lo, self.gene_hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
    /// Cost, lower is better.
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_cost: f64,
    pub mean_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaOutcome {
    pub best: Individual,
    /// Populations evaluated, counting the initial one as generation 1.
    pub generations: usize,
    pub stalled: bool,
    pub history: Vec<GenerationStats>,
}

impl GaOutcome {
    /// Writes `generation,best_cost,mean_cost` rows.
    pub fn write_log_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "generation,best_cost,mean_cost")?;
        for g in &self.history {
            writeln!(w, "{},{:?},{:?}", g.generation, g.best_cost, g.mean_cost)?;
        }
        Ok(())
    }
}

/// Draws the initial population around the previously applied duty.
pub fn initialize_population(
    cfg: &GaConfig,
    n_genes: usize,
    previous_duty: f64,
    rng: &mut PortableRng,
) -> Vec<Vec<f64>> {
    let half = cfg.first_gene_halfwidth * previous_duty;
    (0..cfg.population_size)
        .map(|_| {
            let mut genes = Vec::with_capacity(n_genes);
            let first = cfg.clamp(previous_duty + rng.uniform_in(-half, half));
            genes.push(first);
            for _ in 1..n_genes {
                genes.push(cfg.clamp(rng.normal_with(first, cfg.init_sigma)));
            }
            genes
        })
        .collect()
}

fn evaluate<F>(objective: &mut F, pop: Vec<Vec<f64>>) -> Result<Vec<Individual>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    pop.into_iter()
        .map(|genes| {
            let fitness = objective(&genes)?;
            if fitness.is_nan() {
                return Err(PsnfError::Internal("objective returned NaN".into()));
            }
            Ok(Individual { genes, fitness })
        })
        .collect()
}

/// Index of the lowest cost, first index on ties.
fn best_index(pop: &[Individual]) -> Option<usize> {
    pop.iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, f64)>, (i, ind)| match acc {
            Some((_, f)) if f <= ind.fitness => acc,
            _ => Some((i, ind.fitness)),
        })
        .map(|(i, _)| i)
}

fn tournament(cfg: &GaConfig, pop: &[Individual], rng: &mut PortableRng) -> usize {
    let n = pop.len();
    let mut winner = None::<usize>;
    for _ in 0..cfg.tournament_size {
        let i = ((rng.uniform() * n as f64) as usize).min(n - 1);
        winner = match winner {
            Some(w)
                if pop[w].fitness < pop[i].fitness
                    || (pop[w].fitness == pop[i].fitness && w < i) =>
            {
                Some(w)
            }
            _ => Some(i),
        };
    }
    winner.expect("tournament size is at least 1")
}

fn stats(generation: usize, pop: &[Individual], best: f64) -> GenerationStats {
    GenerationStats {
        generation,
        best_cost: best,
        mean_cost: pop.iter().map(|i| i.fitness).sum::<f64>() / pop.len() as f64,
    }
}

/// Minimizes `objective` over sequences of `n_genes` duties.
pub fn evolve<F>(
    cfg: &GaConfig,
    n_genes: usize,
    mut objective: F,
    previous_duty: f64,
    seed: u64,
) -> Result<GaOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    if n_genes == 0 {
        return Err(PsnfError::InvalidParameter(
            "genome length must be >= 1".into(),
        ));
    }
    let mut rng = PortableRng::seed_from_u64(seed);
    let init = initialize_population(
        cfg,
        n_genes,
        previous_duty.clamp(cfg.gene_lo, cfg.gene_hi),
        &mut rng,
    );
    let mut pop = evaluate(&mut objective, init)?;
    let mut best = pop
        [best_index(&pop).ok_or_else(|| PsnfError::Internal("empty population".into()))?]
    .clone();
    let mut history = vec![stats(1, &pop, best.fitness)];
    let mut stall = 0usize;
    let mut generation = 1usize;
    let mut stalled = false;

    for _ in 0..cfg.generations {
        let mut offspring: Vec<Vec<f64>> = Vec::with_capacity(cfg.population_size);
        while offspring.len() < cfg.population_size - 1 {
            let a = tournament(cfg, &pop, &mut rng);
            let b = tournament(cfg, &pop, &mut rng);
            let mut children = if rng.bernoulli(cfg.crossover_prob) {
                let avg: Vec<f64> = pop[a]
                    .genes
                    .iter()
                    .zip(&pop[b].genes)
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect();
                [avg.clone(), avg]
            } else {
                [pop[a].genes.clone(), pop[b].genes.clone()]
            };
            for child in children.iter_mut() {
                if rng.bernoulli(cfg.mutation_prob) {
                    for g in child.iter_mut() {
                        *g = cfg.clamp(*g + rng.normal_with(0.0, cfg.mutation_sigma));
                    }
                }
            }
            for child in children {
                if offspring.len() < cfg.population_size - 1 {
                    offspring.push(child);
                }
            }
        }
        let mut next = Vec::with_capacity(cfg.population_size);
        next.push(best.clone());
        next.extend(evaluate(&mut objective, offspring)?);
        pop = next;
        generation += 1;

        let idx = best_index(&pop).ok_or_else(|| PsnfError::Internal("empty population".into()))?;
        if pop[idx].fitness < best.fitness - STALL_TOLERANCE {
            stall = 0;
        } else {
            stall += 1;
        }
        if pop[idx].fitness < best.fitness {
            best = pop[idx].clone();
        }
        history.push(stats(generation, &pop, best.fitness));
        if stall >= cfg.stall_limit {
            stalled = true;
            break;
        }
    }

    Ok(GaOutcome {
        best,
        generations: generation,
        stalled,
        history,
    })
}
