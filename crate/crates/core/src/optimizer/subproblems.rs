//! The three sequential sub-problems: HVAC with storage, vehicle charging
//! with storage, and the non-interruptible appliances with storage.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HemError, Result};
use crate::ga::{block_starts, decode_block, decode_xev, evolve, Encoding, GaConfig, GaSettings, GeneDomain, Genome};
use crate::optimizer::model::{ApplianceRequest, HorizonProblem, Loads};
use crate::plant::{DeferrableKind, Dispatch, HvacMode, PowerSnapshot};

/// Controllable actuators the capping loop can bar from a set of steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Actuator {
    Hvac,
    Ev,
    Laundry,
    Dishwasher,
}

impl Actuator {
    pub const ALL: [Actuator; 4] = [Actuator::Hvac, Actuator::Ev, Actuator::Laundry, Actuator::Dishwasher];

    pub fn of(kind: DeferrableKind) -> Self {
        match kind {
            DeferrableKind::Ev => Actuator::Ev,
            DeferrableKind::Laundry => Actuator::Laundry,
            DeferrableKind::Dishwasher => Actuator::Dishwasher,
        }
    }

    /// First sub-problem that decides this actuator.
    pub fn stage(self) -> usize {
        match self {
            Actuator::Hvac => 1,
            Actuator::Ev => 2,
            Actuator::Laundry | Actuator::Dishwasher => 3,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Horizon steps each actuator may not use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabuSet {
    forbidden: [Vec<bool>; 4],
    used: Vec<Actuator>,
}

impl TabuSet {
    pub fn new(n_steps: usize) -> Self {
        Self {
            forbidden: std::array::from_fn(|_| vec![false; n_steps]),
            used: Vec::new(),
        }
    }

    pub fn forbidden(&self, a: Actuator) -> &[bool] {
        &self.forbidden[a.slot()]
    }

    pub fn is_forbidden(&self, a: Actuator, k: usize) -> bool {
        self.forbidden[a.slot()].get(k).copied().unwrap_or(false)
    }

    pub fn forbid(&mut self, a: Actuator, steps: &[usize]) {
        let f = &mut self.forbidden[a.slot()];
        for &k in steps {
            if k < f.len() {
                f[k] = true;
            }
        }
        if !self.used.contains(&a) {
            self.used.push(a);
        }
    }

    pub fn used(&self) -> &[Actuator] {
        &self.used
    }
}

/// Commands over the horizon for every actuator.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan {
    pub u_hvac: Vec<f64>,
    pub u_xev: Vec<u8>,
    pub u_laundry: Vec<u8>,
    pub u_dishwasher: Vec<u8>,
    /// Requested pack current per step (A, positive when discharging).
    pub u_es: Vec<f64>,
    pub loads: Loads,
    /// Planned start of the laundry and dishwasher cycles that have not begun.
    pub starts: Vec<(DeferrableKind, usize)>,
    /// Objective of the last sub-problem solved.
    pub objective: f64,
    /// Last sub-problem solved (1 to 3).
    pub stage: usize,
    pub generations: u32,
    pub max_solve_s: f64,
}

impl ControlPlan {
    /// Idle plan with running cycles committed.
    pub fn idle(p: &HorizonProblem) -> Self {
        let n = p.n_steps;
        let mut loads = Loads::zeros(n);
        loads.hvac = vec![p.hvac.power[p.hvac.index(0.0)]; n];
        loads.deferrable = p.committed.clone();
        Self {
            u_hvac: vec![0.0; n],
            u_xev: vec![0; n],
            u_laundry: vec![0; n],
            u_dishwasher: vec![0; n],
            u_es: vec![0.0; n],
            loads,
            starts: Vec::new(),
            objective: 0.0,
            stage: 0,
            generations: 0,
            max_solve_s: 0.0,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.u_hvac.len()
    }

    /// Storage dispatch, power balance and end-of-step storage SOC per step.
    pub fn power_series(&self, p: &HorizonProblem) -> (Vec<Dispatch>, Vec<PowerSnapshot>, Vec<f64>) {
        p.power_series(&self.loads, &self.u_es)
    }

    pub fn temperatures(&self, p: &HorizonProblem) -> Vec<f64> {
        let idx: Vec<usize> = self.u_hvac.iter().map(|&u| p.hvac.index(u)).collect();
        p.temperatures(&idx)
    }

    /// Power of the movable part of an appliance at horizon step `k`.
    pub fn movable_power(&self, p: &HorizonProblem, a: Actuator, k: usize) -> f64 {
        match a {
            Actuator::Hvac => self.loads.hvac[k],
            Actuator::Ev => self.loads.xev[k],
            Actuator::Laundry | Actuator::Dishwasher => {
                let kind = if a == Actuator::Laundry {
                    DeferrableKind::Laundry
                } else {
                    DeferrableKind::Dishwasher
                };
                match (self.starts.iter().find(|s| s.0 == kind), p.request(kind)) {
                    (Some(&(_, s)), Some(r)) if k >= s && k - s < r.remaining() => r.power[k - s],
                    _ => 0.0,
                }
            }
        }
    }

    fn shift(&self) -> Self {
        let mut out = self.clone();
        fn roll<T: Copy>(v: &mut Vec<T>, fill: T) {
            if !v.is_empty() {
                v.remove(0);
                v.push(fill);
            }
        }
        let last_hvac = *self.u_hvac.last().unwrap_or(&0.0);
        roll(&mut out.u_hvac, last_hvac);
        roll(&mut out.u_xev, 0);
        roll(&mut out.u_laundry, 0);
        roll(&mut out.u_dishwasher, 0);
        roll(&mut out.u_es, 0.0);
        out.starts = self.starts.iter().filter(|s| s.1 > 0).map(|&(k, s)| (k, s - 1)).collect();
        out
    }

    /// This plan advanced by one step and fitted to a new horizon, for warm starts.
    pub fn advanced(&self, n_steps: usize) -> Self {
        let mut out = self.shift();
        out.u_hvac.resize(n_steps, *self.u_hvac.last().unwrap_or(&0.0));
        out.u_xev.resize(n_steps, 0);
        out.u_laundry.resize(n_steps, 0);
        out.u_dishwasher.resize(n_steps, 0);
        out.u_es.resize(n_steps, 0.0);
        out
    }
}

/// GA settings, storage gene domain, random stream and warm start shared by
/// the sub-problem solvers.
#[derive(Debug, Clone)]
pub struct SolveOptions<'a> {
    pub ga: &'a GaSettings,
    /// Discrete storage levels as fractions of the current bound; `None` for a continuous range.
    pub es_levels: Option<&'a [f64]>,
    pub rng_seed: u64,
    pub rng_stream: u64,
    pub warm: Option<&'a ControlPlan>,
}

impl SolveOptions<'_> {
    fn rng(&self, stage: usize) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.rng_seed);
        r.set_stream(self.rng_stream * 4 + stage as u64);
        r
    }
}

fn es_domain(p: &HorizonProblem, levels: Option<&[f64]>) -> GeneDomain {
    let i = p.limits.es_current.min(p.es.max_current());
    match levels {
        Some(l) => GeneDomain::Levels(l.iter().map(|f| f * i).collect()),
        None => GeneDomain::Range(-i, i),
    }
}

/// Storage plans used to seed the search: charge on surplus and discharge
/// on deficit, optionally only while the price exceeds the horizon minimum.
fn rule_storage(p: &HorizonProblem, load: &[f64], priced: bool) -> Vec<f64> {
    let floor = p.weights.elec_price.iter().copied().fold(f64::INFINITY, f64::min);
    let i_max = p.limits.es_current;
    let mut soc = p.initial.soc_es;
    (0..p.n_steps)
        .map(|k| {
            let net = load[k] - p.solar;
            let req = if net < 0.0 {
                p.es.current_for(soc, net)
            } else if !priced || p.weights.elec_price[k] > floor + 1e-12 {
                i_max
            } else {
                0.0
            };
            let d = p.es.dispatch(soc, req, net, p.dt);
            soc = p.es.next_soc(soc, d.current, p.dt);
            req
        })
        .collect()
}

fn storage_seeds(p: &HorizonProblem, load: &[f64], prior: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = prior.iter().map(|v| v.to_vec()).collect();
    out.push(rule_storage(p, load, true));
    out.push(rule_storage(p, load, false));
    out.push(vec![0.0; p.n_steps]);
    out
}

fn ga_for(settings: &GaSettings, stage: usize, mode: HvacMode) -> &GaConfig {
    match (stage, mode) {
        (1, HvacMode::Cool) => &settings.hvac_summer,
        (1, HvacMode::Heat) => &settings.hvac_winter,
        (2, _) => &settings.xev,
        _ => &settings.appliances,
    }
}

/// Greedy thermostat over the horizon: at each step the lowest level whose
/// end-of-step temperature stays within `margin` of the setpoint, else the
/// level that lands closest to it.
pub fn thermostat_plan(p: &HorizonProblem, margin: f64, tabu: &TabuSet) -> Vec<usize> {
    let off = p.hvac.index(0.0);
    let mut t = p.initial.t_indoor;
    (0..p.n_steps)
        .map(|k| {
            let i = if tabu.is_forbidden(Actuator::Hvac, k) {
                off
            } else {
                let dev = |i: usize| (p.hvac.response[i].apply(t) - p.t_set).abs();
                (0..p.hvac.levels.len()).find(|&i| dev(i) <= margin).unwrap_or_else(|| {
                    (0..p.hvac.levels.len())
                        .min_by(|&a, &b| dev(a).total_cmp(&dev(b)))
                        .unwrap_or(off)
                })
            };
            t = p.hvac.response[i].apply(t);
            i
        })
        .collect()
}

fn base_load(p: &HorizonProblem, loads: &Loads, with_xev: bool) -> Vec<f64> {
    (0..p.n_steps)
        .map(|k| p.non_deferrable + loads.hvac[k] + loads.deferrable[k] + if with_xev { loads.xev[k] } else { 0.0 })
        .collect()
}

/// Sub-problem 1: HVAC levels and storage current minimizing energy cost plus
/// discomfort, with the comfort band enforced as a penalty.
pub fn solve_hvac_es(p: &HorizonProblem, tabu: &TabuSet, opts: &SolveOptions) -> Result<ControlPlan> {
    let started = Instant::now();
    let n = p.n_steps;
    let off = p.hvac.index(0.0);
    let es_dom = es_domain(p, opts.es_levels);
    let mut genes = Vec::with_capacity(2 * n);
    for k in 0..n {
        genes.push(if tabu.is_forbidden(Actuator::Hvac, k) {
            GeneDomain::fixed(p.hvac.levels[off])
        } else {
            GeneDomain::Levels(p.hvac.levels.clone())
        });
    }
    genes.extend(std::iter::repeat_n(es_dom, n));
    let enc = Encoding::Direct { genes };

    let fixed: Vec<f64> = (0..n).map(|k| p.non_deferrable + p.committed[k]).collect();
    let hvac_seeds: Vec<Vec<usize>> = {
        let band = p.limits.planning_band();
        let mut v = vec![thermostat_plan(p, 0.8 * band, tabu), thermostat_plan(p, 0.25 * band, tabu)];
        if let Some(w) = opts.warm {
            v.insert(0, w.u_hvac.iter().map(|&u| p.hvac.index(u)).collect());
        }
        v
    };
    let mut seeds = Vec::new();
    for h in &hvac_seeds {
        let load: Vec<f64> = (0..n).map(|k| fixed[k] + p.hvac.power[h[k]]).collect();
        let prior: Vec<&[f64]> = opts.warm.map(|w| w.u_es.as_slice()).into_iter().collect();
        for es in storage_seeds(p, &load, &prior) {
            let mut g: Vec<f64> = h.iter().map(|&i| p.hvac.levels[i]).collect();
            g.extend(es);
            seeds.push(Genome::Direct(g));
        }
    }

    let mut idx = vec![0usize; n];
    let objective = |g: &Genome| -> f64 {
        let Genome::Direct(v) = g else { return f64::INFINITY };
        for k in 0..n {
            idx[k] = p.hvac.index(v[k]);
        }
        let idx = &idx;
        p.thermal_cost(idx) + p.grid_cost(|k| fixed[k] + p.hvac.power[idx[k]], &v[n..])
    };
    let cfg = ga_for(opts.ga, 1, p.hvac.mode);
    let out = evolve(cfg, &enc, &seeds, &mut opts.rng(1), objective)?;
    let Genome::Direct(v) = out.best else {
        return Err(HemError::Encoding("HVAC sub-problem returned a foreign genome".into()));
    };

    let mut plan = opts.warm.cloned().unwrap_or_else(|| ControlPlan::idle(p));
    let base = ControlPlan::idle(p);
    plan.u_xev = base.u_xev;
    plan.u_laundry = base.u_laundry;
    plan.u_dishwasher = base.u_dishwasher;
    plan.starts = Vec::new();
    plan.loads = base.loads;
    plan.u_hvac = v[..n].to_vec();
    plan.loads.hvac = plan.u_hvac.iter().map(|&u| p.hvac.power[p.hvac.index(u)]).collect();
    plan.u_es = v[n..].to_vec();
    plan.objective = out.objective;
    plan.stage = 1;
    plan.generations = out.generations as u32;
    plan.max_solve_s = started.elapsed().as_secs_f64();
    mark_running(p, &mut plan);
    Ok(plan)
}

/// Horizon steps at which the vehicle may charge, and how many of them the
/// plan must use.
pub fn ev_window(p: &HorizonProblem, r: &ApplianceRequest, tabu: &TabuSet) -> (Vec<usize>, usize) {
    let k0 = p.start_step;
    let from = r.enable_step.saturating_sub(k0);
    let until = r.deadline_step.saturating_sub(k0).max(from + r.remaining());
    let allowed: Vec<usize> = (from..until.min(p.n_steps))
        .filter(|&k| !tabu.is_forbidden(Actuator::Ev, k))
        .collect();
    let count = if until > p.n_steps {
        r.remaining().saturating_sub(until - p.n_steps).min(allowed.len())
    } else {
        r.remaining()
    };
    (allowed, count)
}

/// Admissible starts of a non-interruptible cycle within the horizon.
pub fn block_window(p: &HorizonProblem, r: &ApplianceRequest, tabu: &TabuSet) -> Vec<usize> {
    let k0 = p.start_step;
    let c = r.remaining();
    let from = r.enable_step.saturating_sub(k0);
    let until = r.deadline_step.saturating_sub(k0).max(from + c).min(p.n_steps);
    block_starts(from, until, c, tabu.forbidden(Actuator::of(r.kind)))
}

/// Deferral penalty of serving the remaining steps of `r` at the absolute
/// steps `activation` (sorted): each "on" step is charged for its distance
/// from the earliest position it could have had.
pub fn deferral_cost(weight: f64, r: &ApplianceRequest, activation: &[usize]) -> Result<f64> {
    let mut delay = 0usize;
    for (i, &k) in activation.iter().enumerate() {
        let earliest = r.enable_step + r.served + i;
        if k < earliest {
            return Err(HemError::InvalidParameter(format!(
                "{} request {}: activation at step {k} precedes its earliest position {earliest}",
                r.kind.label(),
                r.id
            )));
        }
        delay += k - earliest;
    }
    Ok(weight * delay as f64)
}

fn infeasible(r: &ApplianceRequest, p: &HorizonProblem, reason: &str) -> HemError {
    let earliest = r.enable_step.saturating_sub(p.start_step) + r.remaining();
    HemError::InfeasibleRequest {
        request: format!("{} #{}", r.kind.label(), r.id),
        reason: reason.into(),
        earliest_completion: Some(earliest),
    }
}

/// Sub-problem 2: vehicle activation steps and storage current against the
/// fixed HVAC plan. Skipped (the plan is returned unchanged) when no charge
/// is pending.
pub fn solve_xev_es(p: &HorizonProblem, hvac_plan: &ControlPlan, tabu: &TabuSet, opts: &SolveOptions) -> Result<ControlPlan> {
    let Some(r) = p.request(DeferrableKind::Ev).filter(|r| r.remaining() > 0) else {
        return Ok(hvac_plan.clone());
    };
    let started = Instant::now();
    let n = p.n_steps;
    let (allowed, count) = ev_window(p, r, tabu);
    if count > allowed.len() {
        return Err(infeasible(r, p, "not enough charging steps before the deadline"));
    }
    let es_dom = es_domain(p, opts.es_levels);
    let enc = Encoding::ActivationTimes {
        count,
        allowed: allowed.clone(),
        es: vec![es_dom; n],
    };
    let base = base_load(p, &hvac_plan.loads, false);
    let ev_power = |steps: &[usize], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &s) in steps.iter().enumerate() {
            out[s] = r.power[i];
        }
    };

    let mut step_seeds: Vec<Vec<usize>> = Vec::new();
    let mut by_price = allowed.clone();
    by_price.sort_by(|&a, &b| p.weights.elec_price[a].total_cmp(&p.weights.elec_price[b]).then(a.cmp(&b)));
    let mut cheapest: Vec<usize> = by_price[..count].to_vec();
    cheapest.sort_unstable();
    step_seeds.push(cheapest);
    step_seeds.push(allowed[..count].to_vec());
    if let Some(w) = opts.warm {
        let mut s: Vec<usize> = (0..n)
            .filter(|&k| w.u_xev.get(k) == Some(&1) && allowed.contains(&k))
            .collect();
        for &k in &by_price {
            if s.len() >= count {
                break;
            }
            if !s.contains(&k) {
                s.push(k);
            }
        }
        s.truncate(count);
        s.sort_unstable();
        step_seeds.insert(0, s);
    }
    let mut seeds = Vec::new();
    let mut ev = vec![0.0; n];
    for steps in &step_seeds {
        ev_power(steps, &mut ev);
        let load: Vec<f64> = (0..n).map(|k| base[k] + ev[k]).collect();
        let mut prior: Vec<&[f64]> = vec![hvac_plan.u_es.as_slice()];
        if let Some(w) = opts.warm {
            prior.push(&w.u_es);
        }
        for es in storage_seeds(p, &load, &prior) {
            seeds.push(Genome::ActivationTimes {
                steps: steps.clone(),
                es,
            });
        }
    }

    let k0 = p.start_step;
    let c_d = p.weights.deferral_weight;
    let mut abs = Vec::with_capacity(count);
    let objective = |g: &Genome| -> f64 {
        let Genome::ActivationTimes { steps, es } = g else {
            return f64::INFINITY;
        };
        ev_power(steps, &mut ev);
        abs.clear();
        abs.extend(steps.iter().map(|&s| s + k0));
        let defer = deferral_cost(c_d, r, &abs).unwrap_or(f64::INFINITY);
        let ev = &ev;
        p.grid_cost(|k| base[k] + ev[k], es) + defer
    };
    let cfg = ga_for(opts.ga, 2, p.hvac.mode);
    let out = evolve(cfg, &enc, &seeds, &mut opts.rng(2), objective)?;
    let Genome::ActivationTimes { steps, es } = out.best else {
        return Err(HemError::Encoding("vehicle sub-problem returned a foreign genome".into()));
    };

    let mut plan = hvac_plan.clone();
    plan.u_xev = decode_xev(&steps, n)?;
    let mut ev = vec![0.0; n];
    ev_power(&steps, &mut ev);
    plan.loads.xev = ev;
    plan.u_es = es;
    plan.objective = out.objective;
    plan.stage = 2;
    plan.generations += out.generations as u32;
    plan.max_solve_s = plan.max_solve_s.max(started.elapsed().as_secs_f64());
    Ok(plan)
}

/// Sub-problem 3: start times of the pending laundry and dishwasher cycles and
/// storage current against the fixed HVAC and vehicle plans.
pub fn solve_appliances_es(
    p: &HorizonProblem,
    hvac_plan: &ControlPlan,
    xev_plan: &ControlPlan,
    tabu: &TabuSet,
    opts: &SolveOptions,
) -> Result<ControlPlan> {
    let pending: Vec<&ApplianceRequest> = p
        .requests
        .iter()
        .filter(|r| r.kind != DeferrableKind::Ev && r.served == 0 && r.remaining() > 0)
        .collect();
    let mut plan = xev_plan.clone();
    plan.u_hvac = hvac_plan.u_hvac.clone();
    plan.loads.hvac = hvac_plan.loads.hvac.clone();
    if pending.is_empty() {
        return Ok(plan);
    }
    let started = Instant::now();
    let n = p.n_steps;
    let mut windows = Vec::with_capacity(pending.len());
    for r in &pending {
        let w = block_window(p, r, tabu);
        if w.is_empty() {
            return Err(infeasible(r, p, "no admissible start before the deadline"));
        }
        windows.push(w);
    }
    let es_dom = es_domain(p, opts.es_levels);
    let enc = Encoding::StartTimes {
        windows: windows.clone(),
        es: vec![es_dom; n],
    };
    let base = base_load(p, &plan.loads, true);
    let place = |starts: &[usize], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (r, &s) in pending.iter().zip(starts) {
            for (j, &pw) in r.power.iter().enumerate() {
                out[s + j] += pw;
            }
        }
    };
    let k0 = p.start_step;
    let c_d = p.weights.deferral_weight;
    let defer = |starts: &[usize]| -> f64 {
        pending
            .iter()
            .zip(starts)
            .map(|(r, &s)| {
                let abs: Vec<usize> = (0..r.remaining()).map(|j| k0 + s + j).collect();
                deferral_cost(c_d, r, &abs).unwrap_or(f64::INFINITY)
            })
            .sum()
    };

    let cheapest: Vec<usize> = pending
        .iter()
        .zip(&windows)
        .map(|(r, w)| {
            let cost = |s: usize| -> f64 {
                let e: f64 = r
                    .power
                    .iter()
                    .enumerate()
                    .map(|(j, pw)| p.weights.elec_price[s + j] * pw)
                    .sum();
                e * p.kwh_per_watt_step() + c_d * (k0 + s - (r.enable_step + r.served)) as f64 * r.remaining() as f64
            };
            *w.iter()
                .min_by(|&&a, &&b| cost(a).total_cmp(&cost(b)))
                .expect("window is nonempty")
        })
        .collect();
    let mut start_seeds = vec![windows.iter().map(|w| w[0]).collect::<Vec<_>>(), cheapest];
    if let Some(w) = opts.warm {
        let s: Vec<usize> = pending
            .iter()
            .zip(&windows)
            .map(|(r, win)| {
                w.starts
                    .iter()
                    .find(|x| x.0 == r.kind)
                    .map(|x| x.1)
                    .filter(|s| win.contains(s))
                    .unwrap_or(win[0])
            })
            .collect();
        start_seeds.insert(0, s);
    }
    let mut ld = vec![0.0; n];
    let mut seeds = Vec::new();
    for starts in &start_seeds {
        place(starts, &mut ld);
        let load: Vec<f64> = (0..n).map(|k| base[k] + ld[k]).collect();
        let mut prior: Vec<&[f64]> = vec![xev_plan.u_es.as_slice()];
        if let Some(w) = opts.warm {
            prior.push(&w.u_es);
        }
        for es in storage_seeds(p, &load, &prior) {
            seeds.push(Genome::StartTimes {
                starts: starts.clone(),
                es,
            });
        }
    }

    let objective = |g: &Genome| -> f64 {
        let Genome::StartTimes { starts, es } = g else {
            return f64::INFINITY;
        };
        place(starts, &mut ld);
        let ld = &ld;
        p.grid_cost(|k| base[k] + ld[k], es) + defer(starts)
    };
    let cfg = ga_for(opts.ga, 3, p.hvac.mode);
    let out = evolve(cfg, &enc, &seeds, &mut opts.rng(3), objective)?;
    let Genome::StartTimes { starts, es } = out.best else {
        return Err(HemError::Encoding("appliance sub-problem returned a foreign genome".into()));
    };

    let mut ld = vec![0.0; n];
    place(&starts, &mut ld);
    plan.loads.deferrable = p.committed.iter().zip(&ld).map(|(c, l)| c + l).collect();
    plan.starts = pending.iter().zip(&starts).map(|(r, &s)| (r.kind, s)).collect();
    for (r, &s) in pending.iter().zip(&starts) {
        let block = decode_block(s, r.remaining(), n)?;
        let target = if r.kind == DeferrableKind::Laundry {
            &mut plan.u_laundry
        } else {
            &mut plan.u_dishwasher
        };
        for (t, b) in target.iter_mut().zip(block) {
            *t |= b;
        }
    }
    plan.u_es = es;
    plan.objective = out.objective;
    plan.stage = 3;
    plan.generations += out.generations as u32;
    plan.max_solve_s = plan.max_solve_s.max(started.elapsed().as_secs_f64());
    Ok(plan)
}

/// Marks cycles already running as "on" for their remaining steps.
fn mark_running(p: &HorizonProblem, plan: &mut ControlPlan) {
    for r in p.requests.iter().filter(|r| r.kind != DeferrableKind::Ev && r.served > 0) {
        let target = if r.kind == DeferrableKind::Laundry {
            &mut plan.u_laundry
        } else {
            &mut plan.u_dishwasher
        };
        for u in target.iter_mut().take(r.remaining()) {
            *u = 1;
        }
    }
}
