//! Genome encodings for the three sub-problems and their repair operators.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{HemError, Result};

/// Admissible values of one real-valued gene.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneDomain {
    Levels(Vec<f64>),
    Range(f64, f64),
}

impl GeneDomain {
    pub fn fixed(v: f64) -> Self {
        GeneDomain::Levels(vec![v])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            GeneDomain::Levels(l) => l[rng.gen_range(0..l.len())],
            GeneDomain::Range(lo, hi) => {
                if hi > lo {
                    rng.gen_range(*lo..=*hi)
                } else {
                    *lo
                }
            }
        }
    }

    /// Projects `v` onto the domain (nearest level or clamped range).
    pub fn project(&self, v: f64) -> f64 {
        match self {
            GeneDomain::Levels(l) => *l
                .iter()
                .min_by(|a, b| (*a - v).abs().total_cmp(&(*b - v).abs()))
                .expect("nonempty level set"),
            GeneDomain::Range(lo, hi) => v.clamp(*lo, *hi),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match self {
            GeneDomain::Levels(l) => l.contains(&v),
            GeneDomain::Range(lo, hi) => v >= *lo && v <= *hi,
        }
    }

    fn mutate<R: Rng + ?Sized>(&self, v: f64, rng: &mut R) -> f64 {
        match self {
            GeneDomain::Levels(l) if l.len() > 1 => loop {
                let c = l[rng.gen_range(0..l.len())];
                if c != v {
                    break c;
                }
            },
            GeneDomain::Levels(l) => l[0],
            GeneDomain::Range(lo, hi) => {
                if rng.gen_bool(0.5) {
                    self.sample(rng)
                } else {
                    let w = 0.1 * (hi - lo);
                    (v + rng.gen_range(-1.0..=1.0) * w).clamp(*lo, *hi)
                }
            }
        }
    }
}

/// Search space of one sub-problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoding {
    /// HVAC and storage commands per step, concatenated.
    Direct { genes: Vec<GeneDomain> },
    /// `count` distinct "on" steps drawn from `allowed`, plus storage genes.
    ActivationTimes {
        count: usize,
        allowed: Vec<usize>,
        es: Vec<GeneDomain>,
    },
    /// One start step per appliance from its admissible start set, plus storage genes.
    StartTimes { windows: Vec<Vec<usize>>, es: Vec<GeneDomain> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Genome {
    Direct(Vec<f64>),
    /// Sorted, distinct activation steps.
    ActivationTimes {
        steps: Vec<usize>,
        es: Vec<f64>,
    },
    StartTimes {
        starts: Vec<usize>,
        es: Vec<f64>,
    },
}

impl Genome {
    pub fn es(&self) -> &[f64] {
        match self {
            Genome::Direct(g) => &g[g.len() / 2..],
            Genome::ActivationTimes { es, .. } | Genome::StartTimes { es, .. } => es,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Genome::Direct(g) => g.len(),
            Genome::ActivationTimes { steps, es } => steps.len() + es.len(),
            Genome::StartTimes { starts, es } => starts.len() + es.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Encoding {
    pub fn check_feasible(&self) -> Result<()> {
        match self {
            Encoding::Direct { genes } => {
                if genes.iter().any(|g| matches!(g, GeneDomain::Levels(l) if l.is_empty())) {
                    return Err(HemError::Encoding("empty gene level set".into()));
                }
            }
            Encoding::ActivationTimes { count, allowed, .. } => {
                if *count > allowed.len() {
                    return Err(HemError::InfeasibleRequest {
                        request: "activation set".into(),
                        reason: format!("{count} on-steps needed but only {} admissible", allowed.len()),
                        earliest_completion: None,
                    });
                }
            }
            Encoding::StartTimes { windows, .. } => {
                if let Some(i) = windows.iter().position(|w| w.is_empty()) {
                    return Err(HemError::InfeasibleRequest {
                        request: format!("start time {i}"),
                        reason: "no admissible start before the deadline".into(),
                        earliest_completion: None,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Genome {
        match self {
            Encoding::Direct { genes } => Genome::Direct(genes.iter().map(|g| g.sample(rng)).collect()),
            Encoding::ActivationTimes { count, allowed, es } => {
                let mut steps: Vec<usize> = allowed.choose_multiple(rng, *count).copied().collect();
                steps.sort_unstable();
                Genome::ActivationTimes {
                    steps,
                    es: es.iter().map(|g| g.sample(rng)).collect(),
                }
            }
            Encoding::StartTimes { windows, es } => Genome::StartTimes {
                starts: windows.iter().map(|w| w[rng.gen_range(0..w.len())]).collect(),
                es: es.iter().map(|g| g.sample(rng)).collect(),
            },
        }
    }

    /// Single-point crossover on real-valued parts; uniform gene swap on
    /// activation/start sets.
    pub fn crossover<R: Rng + ?Sized>(&self, a: &Genome, b: &Genome, rng: &mut R) -> Genome {
        match (a, b) {
            (Genome::Direct(x), Genome::Direct(y)) => Genome::Direct(single_point(x, y, rng)),
            (Genome::ActivationTimes { steps: sa, es: ea }, Genome::ActivationTimes { steps: sb, es: eb }) => {
                let steps = sa
                    .iter()
                    .zip(sb)
                    .map(|(p, q)| if rng.gen_bool(0.5) { *p } else { *q })
                    .collect();
                Genome::ActivationTimes {
                    steps,
                    es: single_point(ea, eb, rng),
                }
            }
            (Genome::StartTimes { starts: sa, es: ea }, Genome::StartTimes { starts: sb, es: eb }) => {
                let starts = sa
                    .iter()
                    .zip(sb)
                    .map(|(p, q)| if rng.gen_bool(0.5) { *p } else { *q })
                    .collect();
                Genome::StartTimes {
                    starts,
                    es: single_point(ea, eb, rng),
                }
            }
            _ => a.clone(),
        }
    }

    /// Resets each gene with probability 1/len (at least one gene changes).
    pub fn mutate<R: Rng + ?Sized>(&self, g: &Genome, rng: &mut R) -> Genome {
        let mut out = g.clone();
        let n = g.len();
        if n == 0 {
            return out;
        }
        let rate = 1.0 / n as f64;
        let mut hits: Vec<usize> = (0..n).filter(|_| rng.gen_bool(rate)).collect();
        if hits.is_empty() {
            hits.push(rng.gen_range(0..n));
        }
        match (self, &mut out) {
            (Encoding::Direct { genes }, Genome::Direct(v)) => {
                for i in hits {
                    v[i] = genes[i].mutate(v[i], rng);
                }
            }
            (Encoding::ActivationTimes { allowed, es: dom, .. }, Genome::ActivationTimes { steps, es }) => {
                let c = steps.len();
                for i in hits {
                    if i < c {
                        steps[i] = allowed[rng.gen_range(0..allowed.len())];
                    } else {
                        es[i - c] = dom[i - c].mutate(es[i - c], rng);
                    }
                }
            }
            (Encoding::StartTimes { windows, es: dom }, Genome::StartTimes { starts, es }) => {
                let c = starts.len();
                for i in hits {
                    if i < c {
                        starts[i] = windows[i][rng.gen_range(0..windows[i].len())];
                    } else {
                        es[i - c] = dom[i - c].mutate(es[i - c], rng);
                    }
                }
            }
            _ => {}
        }
        out
    }

    /// Restores feasibility: genes outside their window are moved to the
    /// nearest admissible value, duplicate activation steps are resampled.
    pub fn repair<R: Rng + ?Sized>(&self, g: Genome, rng: &mut R) -> Genome {
        match (self, g) {
            (Encoding::Direct { genes }, Genome::Direct(v)) => {
                Genome::Direct(v.iter().zip(genes).map(|(x, d)| d.project(*x)).collect())
            }
            (Encoding::ActivationTimes { allowed, es: dom, .. }, Genome::ActivationTimes { steps, es }) => {
                let mut fixed: Vec<usize> = steps.iter().map(|&s| nearest(allowed, s)).collect();
                fixed.sort_unstable();
                let mut seen = std::collections::BTreeSet::new();
                let mut dup = 0;
                let mut distinct = Vec::with_capacity(fixed.len());
                for s in fixed {
                    if seen.insert(s) {
                        distinct.push(s);
                    } else {
                        dup += 1;
                    }
                }
                if dup > 0 {
                    let free: Vec<usize> = allowed.iter().copied().filter(|s| !seen.contains(s)).collect();
                    distinct.extend(free.choose_multiple(rng, dup).copied());
                    distinct.sort_unstable();
                }
                Genome::ActivationTimes {
                    steps: distinct,
                    es: es.iter().zip(dom).map(|(x, d)| d.project(*x)).collect(),
                }
            }
            (Encoding::StartTimes { windows, es: dom }, Genome::StartTimes { starts, es }) => Genome::StartTimes {
                starts: starts.iter().zip(windows).map(|(&s, w)| nearest(w, s)).collect(),
                es: es.iter().zip(dom).map(|(x, d)| d.project(*x)).collect(),
            },
            (_, g) => g,
        }
    }
}

fn single_point<R: Rng + ?Sized>(a: &[f64], b: &[f64], rng: &mut R) -> Vec<f64> {
    if a.len() < 2 {
        return if rng.gen_bool(0.5) { a.to_vec() } else { b.to_vec() };
    }
    let cut = rng.gen_range(1..a.len());
    a[..cut].iter().chain(&b[cut..]).copied().collect()
}

/// Closest admissible step; ties go to the earlier one. `allowed` is sorted.
fn nearest(allowed: &[usize], s: usize) -> usize {
    match allowed.binary_search(&s) {
        Ok(_) => s,
        Err(0) => allowed[0],
        Err(i) if i >= allowed.len() => allowed[allowed.len() - 1],
        Err(i) => {
            let (lo, hi) = (allowed[i - 1], allowed[i]);
            if s - lo <= hi - s {
                lo
            } else {
                hi
            }
        }
    }
}

/// Binary command with ones exactly at the listed activation steps.
pub fn decode_xev(steps: &[usize], n_h: usize) -> Result<Vec<u8>> {
    let mut v = vec![0u8; n_h];
    for &k in steps {
        if k >= n_h {
            return Err(HemError::Encoding(format!("activation step {k} outside horizon of {n_h}")));
        }
        if v[k] == 1 {
            return Err(HemError::Encoding(format!("duplicate activation step {k}")));
        }
        v[k] = 1;
    }
    Ok(v)
}

/// Binary command with a single block of `c` ones starting at `k_start`.
pub fn decode_block(k_start: usize, c: usize, n_h: usize) -> Result<Vec<u8>> {
    if k_start + c > n_h {
        return Err(HemError::Encoding(format!(
            "block [{k_start}, {}) exceeds horizon of {n_h}",
            k_start + c
        )));
    }
    let mut v = vec![0u8; n_h];
    v[k_start..k_start + c].iter_mut().for_each(|u| *u = 1);
    Ok(v)
}

/// Admissible starts for a block of length `c` in `[enable, deadline)` whose
/// run avoids every forbidden step.
pub fn block_starts(enable: usize, deadline: usize, c: usize, forbidden: &[bool]) -> Vec<usize> {
    if c == 0 || deadline < enable + c {
        return Vec::new();
    }
    (enable..=deadline - c)
        .filter(|&s| (s..s + c).all(|k| !forbidden.get(k).copied().unwrap_or(false)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn decode_xev_examples() {
        assert_eq!(decode_xev(&[2, 3, 7], 8).unwrap(), vec![0, 0, 1, 1, 0, 0, 0, 1]);
        assert_eq!(decode_xev(&[], 4).unwrap(), vec![0; 4]);
        assert!(decode_xev(&[1, 1], 4).is_err());
        assert!(decode_xev(&[4], 4).is_err());
    }

    #[test]
    fn decode_block_examples() {
        let v = decode_block(5, 9, 48).unwrap();
        assert!(v.iter().enumerate().all(|(k, &u)| (u == 1) == (5..=13).contains(&k)));
        assert_eq!(decode_block(0, 1, 4).unwrap(), vec![1, 0, 0, 0]);
        assert!(decode_block(44, 6, 48).is_err());
    }

    #[test]
    fn start_window_arithmetic() {
        let w = block_starts(0, 48, 6, &[]);
        assert_eq!((w[0], *w.last().unwrap(), w.len()), (0, 42, 43));
        let mut forbidden = vec![false; 48];
        forbidden[10] = true;
        let w = block_starts(0, 48, 6, &forbidden);
        assert!(!w.iter().any(|s| (5..=10).contains(s)));
        assert!(block_starts(0, 5, 6, &[]).is_empty());
    }

    #[test]
    fn repair_clamps_late_start() {
        let enc = Encoding::StartTimes {
            windows: vec![block_starts(0, 48, 6, &[])],
            es: vec![],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = enc.repair(
            Genome::StartTimes {
                starts: vec![47],
                es: vec![],
            },
            &mut rng,
        );
        assert_eq!(
            g,
            Genome::StartTimes {
                starts: vec![42],
                es: vec![]
            }
        );
        let ok = Genome::StartTimes {
            starts: vec![17],
            es: vec![],
        };
        assert_eq!(enc.repair(ok.clone(), &mut rng), ok);
    }

    #[test]
    fn repair_resamples_duplicates() {
        let enc = Encoding::ActivationTimes {
            count: 4,
            allowed: (0..10).collect(),
            es: vec![],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = enc.repair(
            Genome::ActivationTimes {
                steps: vec![2, 2, 5, 5],
                es: vec![],
            },
            &mut rng,
        );
        let Genome::ActivationTimes { steps, .. } = g else { panic!() };
        assert_eq!(steps.len(), 4);
        let mut d = steps.clone();
        d.dedup();
        assert_eq!(d.len(), 4);
        assert!(steps.contains(&2) && steps.contains(&5));
    }

    #[test]
    fn empty_window_is_infeasible() {
        let enc = Encoding::StartTimes {
            windows: vec![vec![]],
            es: vec![],
        };
        assert!(matches!(enc.check_feasible(), Err(HemError::InfeasibleRequest { .. })));
        let enc = Encoding::ActivationTimes {
            count: 5,
            allowed: vec![0, 1],
            es: vec![],
        };
        assert!(enc.check_feasible().is_err());
    }

    proptest! {
        #[test]
        fn popcount_matches_activation_count(mut v in prop::collection::btree_set(0usize..48, 0..30)) {
            let steps: Vec<usize> = std::mem::take(&mut v).into_iter().collect();
            let d = decode_xev(&steps, 48).unwrap();
            prop_assert_eq!(d.iter().map(|&u| u as usize).sum::<usize>(), steps.len());
        }

        #[test]
        fn block_has_one_rising_and_falling_edge(c in 1usize..12, k in 0usize..36) {
            let d = decode_block(k, c, 48).unwrap();
            let mut padded = vec![0u8];
            padded.extend(&d);
            padded.push(0);
            let rising = padded.windows(2).filter(|w| w[0] == 0 && w[1] == 1).count();
            let falling = padded.windows(2).filter(|w| w[0] == 1 && w[1] == 0).count();
            prop_assert_eq!((rising, falling), (1, 1));
        }

        #[test]
        fn operators_preserve_feasibility(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let es = vec![GeneDomain::Range(-40.0, 40.0); 8];
            let encs = [
                Encoding::Direct { genes: [vec![GeneDomain::Levels(vec![0.0, 0.5, 1.0]); 8], es.clone()].concat() },
                Encoding::ActivationTimes { count: 3, allowed: vec![1, 2, 4, 5, 7], es: es.clone() },
                Encoding::StartTimes { windows: vec![vec![0, 1, 2], vec![3, 4]], es },
            ];
            for enc in &encs {
                let a = enc.random(&mut rng);
                let b = enc.random(&mut rng);
                let c = enc.repair(enc.crossover(&a, &b, &mut rng), &mut rng);
                let m = enc.repair(enc.mutate(&c, &mut rng), &mut rng);
                for g in [&a, &b, &c, &m] {
                    match (enc, g) {
                        (Encoding::Direct { genes }, Genome::Direct(v)) =>
                            prop_assert!(v.iter().zip(genes).all(|(x, d)| d.contains(*x))),
                        (Encoding::ActivationTimes { count, allowed, .. }, Genome::ActivationTimes { steps, .. }) => {
                            prop_assert_eq!(steps.len(), *count);
                            prop_assert!(steps.iter().all(|s| allowed.contains(s)));
                            prop_assert!(steps.windows(2).all(|w| w[0] < w[1]));
                        }
                        (Encoding::StartTimes { windows, .. }, Genome::StartTimes { starts, .. }) =>
                            prop_assert!(starts.iter().zip(windows).all(|(s, w)| w.contains(s))),
                        _ => prop_assert!(false, "variant mismatch"),
                    }
                }
            }
        }
    }
}
