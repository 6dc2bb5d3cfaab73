//! Elitist genetic algorithm used by every optimizer sub-problem.

pub mod encoding;

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
pub use encoding::{block_starts, decode_block, decode_xev, Encoding, GeneDomain, Genome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub elite_count: usize,
    pub objective_tolerance: f64,
    pub crossover_fraction: f64,
    pub max_generations: usize,
    pub max_stalled: usize,
    pub time_limit_s: f64,
}

impl GaConfig {
    fn preset(population_size: usize, elite_count: usize, objective_tolerance: f64, crossover_fraction: f64) -> Self {
        Self {
            population_size,
            elite_count,
            objective_tolerance,
            crossover_fraction,
            max_generations: 500,
            max_stalled: 50,
            time_limit_s: 30.0,
        }
    }

    pub fn hvac_summer() -> Self {
        Self::preset(100, 10, 1e-2, 0.4)
    }

    pub fn hvac_winter() -> Self {
        Self::preset(50, 10, 1e-3, 0.2)
    }

    pub fn xev() -> Self {
        Self::preset(250, 15, 1e-4, 0.4)
    }

    pub fn appliances() -> Self {
        Self::preset(250, 20, 1e-3, 0.2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HemError::InvalidParameter(format!("GA: {m}")));
        if self.population_size < 2 {
            return bad("population must hold at least two individuals");
        }
        if self.elite_count == 0 || self.elite_count >= self.population_size {
            return bad("elite count must lie in [1, population)");
        }
        if !(0.0..=1.0).contains(&self.crossover_fraction) {
            return bad("crossover fraction must lie in [0, 1]");
        }
        if !(self.objective_tolerance >= 0.0) {
            return bad("tolerance must be non-negative");
        }
        if self.max_generations == 0 || self.max_stalled == 0 {
            return bad("generation limits must be positive");
        }
        if !(self.time_limit_s > 0.0) {
            return bad("time limit must be positive");
        }
        Ok(())
    }
}

/// Per-sub-problem settings, one block per optimizer stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSettings {
    pub hvac_summer: GaConfig,
    pub hvac_winter: GaConfig,
    pub xev: GaConfig,
    pub appliances: GaConfig,
}

impl Default for GaSettings {
    fn default() -> Self {
        Self {
            hvac_summer: GaConfig::hvac_summer(),
            hvac_winter: GaConfig::hvac_winter(),
            xev: GaConfig::xev(),
            appliances: GaConfig::appliances(),
        }
    }
}

impl GaSettings {
    pub fn validate(&self) -> Result<()> {
        for c in [&self.hvac_summer, &self.hvac_winter, &self.xev, &self.appliances] {
            c.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Generations,
    Stalled,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: Genome,
    pub objective: f64,
    pub generations: usize,
    pub stop: StopReason,
    /// Best objective after each generation, index 0 being the initial population.
    pub history: Vec<f64>,
}

/// Random initial population, with any `seeds` placed first after repair.
pub fn init_population<R: Rng + ?Sized>(cfg: &GaConfig, enc: &Encoding, seeds: &[Genome], rng: &mut R) -> Result<Vec<Genome>> {
    cfg.validate()?;
    enc.check_feasible()?;
    let mut pop: Vec<Genome> = seeds
        .iter()
        .take(cfg.population_size)
        .map(|s| enc.repair(s.clone(), rng))
        .collect();
    while pop.len() < cfg.population_size {
        pop.push(enc.random(rng));
    }
    Ok(pop)
}

/// Runs the GA until the generation cap, the stall test or the wall-clock limit fires.
pub fn evolve<R, F>(cfg: &GaConfig, enc: &Encoding, seeds: &[Genome], rng: &mut R, mut objective: F) -> Result<GaOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(&Genome) -> f64,
{
    let started = Instant::now();
    let limit = Duration::from_secs_f64(cfg.time_limit_s);
    let mut pop = init_population(cfg, enc, seeds, rng)?;
    let mut fit: Vec<f64> = pop.iter().map(&mut objective).map(sanitize).collect();

    let n_children = cfg.population_size - cfg.elite_count;
    let n_cross = (cfg.crossover_fraction * n_children as f64).round() as usize;
    let mut history = vec![fit.iter().copied().fold(f64::INFINITY, f64::min)];
    let mut stop = StopReason::Generations;
    let mut generation = 0;

    while generation < cfg.max_generations {
        if started.elapsed() >= limit {
            stop = StopReason::TimeLimit;
            break;
        }
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]));
        let elites: Vec<usize> = order[..cfg.elite_count].to_vec();

        let mut next = Vec::with_capacity(cfg.population_size);
        let mut next_fit = Vec::with_capacity(cfg.population_size);
        for &e in &elites {
            next.push(pop[e].clone());
            next_fit.push(fit[e]);
        }
        for i in 0..n_children {
            let child = if i < n_cross && elites.len() > 1 {
                let a = rng.gen_range(0..elites.len());
                let mut b = rng.gen_range(0..elites.len() - 1);
                if b >= a {
                    b += 1;
                }
                enc.crossover(&pop[elites[a]], &pop[elites[b]], rng)
            } else {
                let p = elites[rng.gen_range(0..elites.len())];
                enc.mutate(&pop[p], rng)
            };
            let child = enc.repair(child, rng);
            next_fit.push(sanitize(objective(&child)));
            next.push(child);
        }
        pop = next;
        fit = next_fit;
        generation += 1;

        let best = fit.iter().copied().fold(f64::INFINITY, f64::min);
        history.push(best);
        if generation >= cfg.max_stalled {
            let then = history[generation - cfg.max_stalled];
            if then - best <= cfg.objective_tolerance * best.abs().max(1.0) {
                stop = StopReason::Stalled;
                break;
            }
        }
    }

    let (bi, &objective) = fit
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("population is nonempty");
    Ok(GaOutcome {
        best: pop[bi].clone(),
        objective,
        generations: generation,
        stop,
        history,
    })
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> GaConfig {
        GaConfig {
            population_size: 40,
            elite_count: 6,
            objective_tolerance: 1e-9,
            crossover_fraction: 0.4,
            max_generations: 200,
            max_stalled: 50,
            time_limit_s: 30.0,
        }
    }

    #[test]
    fn presets_validate() {
        GaSettings::default().validate().unwrap();
        let x = GaConfig::xev();
        assert_eq!(
            (x.population_size, x.elite_count, x.max_generations, x.max_stalled),
            (250, 15, 500, 50)
        );
        let mut bad = GaConfig::hvac_winter();
        bad.elite_count = 50;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn same_seed_same_population() {
        let enc = Encoding::StartTimes {
            windows: vec![block_starts(0, 48, 6, &[]); 2],
            es: vec![GeneDomain::Range(-1.0, 1.0); 4],
        };
        let cfg = GaConfig::appliances();
        let a = init_population(&cfg, &enc, &[], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = init_population(&cfg, &enc, &[], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn start_population_covers_window_uniformly() {
        let enc = Encoding::StartTimes {
            windows: vec![block_starts(0, 48, 6, &[])],
            es: vec![],
        };
        let mut cfg = GaConfig::appliances();
        cfg.population_size = 43_000;
        let pop = init_population(&cfg, &enc, &[], &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mut counts = [0usize; 43];
        for g in &pop {
            let Genome::StartTimes { starts, .. } = g else { panic!() };
            assert!(starts[0] <= 42);
            counts[starts[0]] += 1;
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 1000.0).powi(2) / 1000.0).sum();
        // 42 degrees of freedom; 99.9th percentile is about 76.
        assert!(chi2 < 76.0, "chi2 = {chi2}");
    }

    #[test]
    fn constant_objective_stalls_at_limit() {
        let enc = Encoding::Direct {
            genes: vec![GeneDomain::Levels(vec![0.0, 1.0]); 6],
        };
        let out = evolve(&GaConfig::hvac_summer(), &enc, &[], &mut ChaCha8Rng::seed_from_u64(1), |_| {
            3.0
        })
        .unwrap();
        assert_eq!(out.stop, StopReason::Stalled);
        assert_eq!(out.generations, 50);
    }

    #[test]
    fn best_is_monotone_under_elitism() {
        let enc = Encoding::Direct {
            genes: vec![GeneDomain::Range(-5.0, 5.0); 10],
        };
        let target: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 - 3.0).collect();
        let out = evolve(&small(), &enc, &[], &mut ChaCha8Rng::seed_from_u64(2), |g| {
            let Genome::Direct(v) = g else { unreachable!() };
            v.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum()
        })
        .unwrap();
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.objective < out.history[0]);
    }

    #[test]
    fn matches_exhaustive_search_on_toy_problem() {
        // 3 steps of binary HVAC plus 3 steps of 3-level storage: 3^3 * 2^3 = 216 points.
        let price = [0.3, 0.1, 0.2];
        let need = [1.0, 0.0, 1.0];
        let cost = |h: &[f64], e: &[f64]| -> f64 {
            let mut soc: f64 = 0.5;
            let mut c = 0.0;
            for k in 0..3 {
                soc -= 0.25 * e[k];
                let grid = (2.0 * h[k] + 0.5 - e[k]).max(0.0);
                c += price[k] * grid + 5.0 * (need[k] - h[k]).abs();
            }
            c + 10.0 * (soc - soc.clamp(0.2, 0.8)).abs()
        };
        let mut best = f64::INFINITY;
        for hb in 0..8u32 {
            for ei in 0..27u32 {
                let h: Vec<f64> = (0..3).map(|k| ((hb >> k) & 1) as f64).collect();
                let e: Vec<f64> = (0..3).map(|k| ((ei / 3u32.pow(k)) % 3) as f64 - 1.0).collect();
                best = best.min(cost(&h, &e));
            }
        }
        let enc = Encoding::Direct {
            genes: [
                vec![GeneDomain::Levels(vec![0.0, 1.0]); 3],
                vec![GeneDomain::Levels(vec![-1.0, 0.0, 1.0]); 3],
            ]
            .concat(),
        };
        let mut hits = 0;
        for seed in 0..20 {
            let out = evolve(&small(), &enc, &[], &mut ChaCha8Rng::seed_from_u64(seed), |g| {
                let Genome::Direct(v) = g else { unreachable!() };
                cost(&v[..3], &v[3..])
            })
            .unwrap();
            assert!(out.objective >= best - 1e-12);
            hits += usize::from((out.objective - best).abs() < 1e-12);
        }
        assert!(hits >= 18, "global optimum found for {hits}/20 seeds");
    }

    #[test]
    fn seeds_enter_population() {
        let enc = Encoding::Direct {
            genes: vec![GeneDomain::Levels(vec![0.0, 1.0]); 4],
        };
        let seed = Genome::Direct(vec![1.0, 0.0, 1.0, 0.0]);
        let out = evolve(
            &small(),
            &enc,
            std::slice::from_ref(&seed),
            &mut ChaCha8Rng::seed_from_u64(4),
            |g| {
                if *g == seed {
                    0.0
                } else {
                    1.0
                }
            },
        )
        .unwrap();
        assert_eq!(out.best, seed);
        assert_eq!(out.history[0], 0.0);
    }

    #[test]
    fn time_limit_stops_search() {
        let mut cfg = small();
        cfg.time_limit_s = 0.02;
        cfg.max_stalled = 500;
        cfg.max_generations = 500;
        let enc = Encoding::Direct {
            genes: vec![GeneDomain::Range(0.0, 1.0); 4],
        };
        let out = evolve(&cfg, &enc, &[], &mut ChaCha8Rng::seed_from_u64(0), |g| {
            std::thread::sleep(Duration::from_micros(200));
            g.es()[0]
        })
        .unwrap();
        assert_eq!(out.stop, StopReason::TimeLimit);
    }
}
