//! Exhaustive-enumeration reference solutions for small horizon instances,
//! and a generator of such instances.
//!
//! Objectives here are recomputed from the full power series rather than the
//! fast evaluators the GA uses, so the two paths check each other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HemError, Result};
use crate::optimizer::model::{ApplianceRequest, CostWeights, EsModel, HorizonProblem, HorizonState, HvacModel, Limits, Loads};
use crate::optimizer::subproblems::deferral_cost;
use crate::plant::{BatteryPack, CellModel, DeferrableKind, HvacMode, HvacUnit, TemperatureSource, ThermalHouse};

/// Enumeration is refused above this many candidate plans.
pub const MAX_PLANS: usize = 5_000_000;

fn grid_terms(p: &HorizonProblem, loads: &Loads, u_es: &[f64]) -> f64 {
    let (_, snaps, socs) = p.power_series(loads, u_es);
    let w = &p.weights;
    let mut cost = 0.0;
    for (k, s) in snaps.iter().enumerate() {
        cost += w.elec_price[k] * s.grid * p.dt / 3.6e6;
        cost += w.cap_penalty * (s.grid - p.limits.grid_cap).max(0.0) / 1000.0;
    }
    let end = socs.last().copied().unwrap_or(p.initial.soc_es);
    cost - (end - p.initial.soc_es) * p.es.kwh_per_soc() * w.terminal_value
}

/// Objective of the HVAC sub-problem for explicit commands.
pub fn objective_hvac_es(p: &HorizonProblem, u_hvac: &[f64], u_es: &[f64]) -> f64 {
    let idx: Vec<usize> = u_hvac.iter().map(|&u| p.hvac.index(u)).collect();
    let temps = p.temperatures(&idx);
    let band = p.limits.planning_band();
    let w = &p.weights;
    let mut thermal = 0.0;
    for (k, t) in temps.iter().enumerate() {
        let dev = t - p.t_set;
        thermal += w.comfort_weight[k] * dev * dev;
        let excess = (dev.abs() - band).max(0.0);
        thermal += w.band_linear * excess + w.band_quadratic * excess * excess;
    }
    let mut loads = Loads::zeros(p.n_steps);
    loads.hvac = idx.iter().map(|&i| p.hvac.power[i]).collect();
    loads.deferrable = p.committed.clone();
    thermal + grid_terms(p, &loads, u_es)
}

/// Objective of the vehicle sub-problem for activation steps `steps` (sorted, horizon-relative).
pub fn objective_xev_es(p: &HorizonProblem, fixed: &Loads, steps: &[usize], u_es: &[f64]) -> Result<f64> {
    let r = p
        .request(DeferrableKind::Ev)
        .ok_or_else(|| HemError::InvalidParameter("no vehicle request in the horizon".into()))?;
    let mut loads = fixed.clone();
    loads.xev = vec![0.0; p.n_steps];
    for (i, &s) in steps.iter().enumerate() {
        loads.xev[s] = r.power[i];
    }
    let abs: Vec<usize> = steps.iter().map(|s| s + p.start_step).collect();
    Ok(grid_terms(p, &loads, u_es) + deferral_cost(p.weights.deferral_weight, r, &abs)?)
}

/// Objective of the appliance sub-problem for one start per request in `requests`.
pub fn objective_appliances_es(
    p: &HorizonProblem,
    fixed: &Loads,
    requests: &[&ApplianceRequest],
    starts: &[usize],
    u_es: &[f64],
) -> Result<f64> {
    let mut loads = fixed.clone();
    let mut defer = 0.0;
    for (r, &s) in requests.iter().zip(starts) {
        for (j, pw) in r.power.iter().enumerate() {
            loads.deferrable[s + j] += pw;
        }
        let abs: Vec<usize> = (0..r.remaining()).map(|j| p.start_step + s + j).collect();
        defer += deferral_cost(p.weights.deferral_weight, r, &abs)?;
    }
    Ok(grid_terms(p, &loads, u_es) + defer)
}

/// Calls `f` with every vector of length `n` over `values`.
fn for_each_vector(values: &[f64], n: usize, f: &mut dyn FnMut(&[f64])) {
    let mut idx = vec![0usize; n];
    let mut v = vec![values[0]; n];
    loop {
        f(&v);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            idx[i] += 1;
            if idx[i] < values.len() {
                v[i] = values[idx[i]];
                break;
            }
            idx[i] = 0;
            v[i] = values[0];
            i += 1;
        }
    }
}

fn for_each_combination(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, f);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::with_capacity(k), f);
}

fn check_size(plans: f64) -> Result<()> {
    if plans > MAX_PLANS as f64 {
        return Err(HemError::InvalidParameter(format!(
            "enumeration over {plans:.0} plans exceeds the limit of {MAX_PLANS}"
        )));
    }
    Ok(())
}

/// Best objective and commands of the HVAC sub-problem over all level combinations.
pub fn enumerate_hvac_es(p: &HorizonProblem, es_levels: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n = p.n_steps;
    check_size(((p.hvac.levels.len() * es_levels.len()) as f64).powi(n as i32))?;
    let mut best = (f64::INFINITY, Vec::new(), Vec::new());
    for_each_vector(&p.hvac.levels, n, &mut |h| {
        for_each_vector(es_levels, n, &mut |e| {
            let v = objective_hvac_es(p, h, e);
            if v < best.0 {
                best = (v, h.to_vec(), e.to_vec());
            }
        });
    });
    Ok(best)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Best objective of the vehicle sub-problem over all activation sets in `allowed`.
pub fn enumerate_xev_es(
    p: &HorizonProblem,
    fixed: &Loads,
    allowed: &[usize],
    count: usize,
    es_levels: &[f64],
) -> Result<(f64, Vec<usize>, Vec<f64>)> {
    check_size(binomial(allowed.len(), count) * (es_levels.len() as f64).powi(p.n_steps as i32))?;
    let mut best = (f64::INFINITY, Vec::new(), Vec::new());
    let mut err = None;
    for_each_combination(allowed, count, &mut |steps| {
        for_each_vector(es_levels, p.n_steps, &mut |e| match objective_xev_es(p, fixed, steps, e) {
            Ok(v) if v < best.0 => best = (v, steps.to_vec(), e.to_vec()),
            Ok(_) => {}
            Err(x) => err = Some(x),
        });
    });
    err.map_or(Ok(best), Err)
}

/// Best objective of the appliance sub-problem over all start combinations.
pub fn enumerate_appliances_es(
    p: &HorizonProblem,
    fixed: &Loads,
    requests: &[&ApplianceRequest],
    windows: &[Vec<usize>],
    es_levels: &[f64],
) -> Result<(f64, Vec<usize>, Vec<f64>)> {
    let combos: f64 = windows.iter().map(|w| w.len() as f64).product();
    check_size(combos * (es_levels.len() as f64).powi(p.n_steps as i32))?;
    let mut best = (f64::INFINITY, Vec::new(), Vec::new());
    let mut err = None;
    let mut idx = vec![0usize; windows.len()];
    loop {
        let starts: Vec<usize> = idx.iter().zip(windows).map(|(&i, w)| w[i]).collect();
        for_each_vector(
            es_levels,
            p.n_steps,
            &mut |e| match objective_appliances_es(p, fixed, requests, &starts, e) {
                Ok(v) if v < best.0 => best = (v, starts.clone(), e.to_vec()),
                Ok(_) => {}
                Err(x) => err = Some(x),
            },
        );
        let mut i = 0;
        loop {
            if i == idx.len() {
                return err.map_or(Ok(best), Err);
            }
            idx[i] += 1;
            if idx[i] < windows[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Parameters of a randomized toy instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToySpec {
    pub n_steps: usize,
    pub mode: HvacMode,
    /// Fixed ambient temperature instead of a random one.
    pub ambient: Option<f64>,
    /// Vehicle request with this many remaining steps.
    pub ev_steps: Option<usize>,
    /// Laundry and dishwasher cycle lengths in steps.
    pub laundry_steps: Option<usize>,
    pub dishwasher_steps: Option<usize>,
}

impl ToySpec {
    pub fn hvac_only(n_steps: usize, mode: HvacMode) -> Self {
        Self {
            n_steps,
            mode,
            ambient: None,
            ev_steps: None,
            laundry_steps: None,
            dishwasher_steps: None,
        }
    }
}

fn toy_cell() -> CellModel {
    use crate::table::Table2D;
    CellModel {
        name: "toy".into(),
        nominal_voltage: 3.2,
        capacity_ah: 2.3,
        max_voltage: 3.6,
        ocv: Table2D::new(
            vec![0.0, 0.1, 0.5, 0.9, 1.0],
            vec![-20.0, 50.0],
            vec![
                vec![2.9, 3.0],
                vec![3.15, 3.2],
                vec![3.28, 3.3],
                vec![3.33, 3.35],
                vec![3.5, 3.5],
            ],
        )
        .expect("valid toy OCV map"),
        r0: Table2D::constant((0.0, 1.0), (-20.0, 50.0), 0.012),
    }
}

/// Random horizon instance on a small house, a 5 kWh pack and a flat or
/// two-level price. Prices, disturbances and the initial state vary with `seed`.
pub fn toy_problem(seed: u64, spec: &ToySpec) -> Result<HorizonProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n_steps;
    let dt = 600.0;
    let unit = HvacUnit {
        mass_flow: 0.6,
        supply_temp_heat: 35.0,
        supply_temp_cool: 12.0,
        cp_air: 1005.0,
        cop: crate::table::Table1D::new(vec![0.0, 80.0], vec![4.0, 2.0])?,
        shr: 0.8,
        pressure_drop: 250.0,
        fan_eff: 0.6,
        air_density: 1.2,
        mode_threshold: 20.0,
    };
    let house = ThermalHouse {
        air_mass: 2000.0,
        cv_air: 718.0,
        thermal_resistance: 0.006,
        indoor_temp: 0.0,
    };
    let (random_ambient, t_set) = match spec.mode {
        HvacMode::Cool => (rng.gen_range(26.0..34.0), 18.0),
        HvacMode::Heat => (rng.gen_range(-5.0..10.0), 22.0),
    };
    let ambient = spec.ambient.unwrap_or(random_ambient);
    let pack = BatteryPack::sized(
        std::sync::Arc::new(toy_cell()),
        5_000.0,
        50.0,
        0.95,
        rng.gen_range(0.25..0.7),
        TemperatureSource::Fixed(25.0),
    )?;
    let es = EsModel::new(&pack, 25.0, 0.2, 0.8)?;
    let cheap = rng.gen_range(0.05..0.12);
    let dear = rng.gen_range(0.15..0.35);
    let switch = rng.gen_range(0..=n);
    let price: Vec<f64> = (0..n).map(|k| if k < switch { dear } else { cheap }).collect();

    let mut requests = Vec::new();
    let mut add = |kind, c: usize, p: f64, rng: &mut ChaCha8Rng| {
        let power = if kind == DeferrableKind::Ev {
            (0..c).map(|i| p * (1.0 - 0.05 * i as f64)).collect()
        } else {
            (0..c).map(|_| p * rng.gen_range(0.6..1.0)).collect()
        };
        requests.push(ApplianceRequest {
            id: requests.len(),
            kind,
            enable_step: 0,
            deadline_step: n,
            completion_steps: c,
            served: 0,
            power,
        });
    };
    if let Some(c) = spec.ev_steps {
        add(DeferrableKind::Ev, c, 7560.0, &mut rng);
    }
    if let Some(c) = spec.laundry_steps {
        add(DeferrableKind::Laundry, c, 3000.0, &mut rng);
    }
    if let Some(c) = spec.dishwasher_steps {
        add(DeferrableKind::Dishwasher, c, 1800.0, &mut rng);
    }

    let p = HorizonProblem {
        start_step: 0,
        n_steps: n,
        dt,
        t_set,
        ambient,
        solar: rng.gen_range(0.0..4000.0),
        non_deferrable: rng.gen_range(200.0..1500.0),
        committed: vec![0.0; n],
        initial: HorizonState {
            t_indoor: t_set + rng.gen_range(-0.6..0.6),
            soc_xev: 0.3,
            soc_es: pack.soc,
        },
        hvac: HvacModel::new(&house, &unit, spec.mode, ambient, dt)?,
        limits: Limits {
            band: 1.0,
            band_backoff: 0.1,
            soc_min: 0.2,
            soc_max: 0.8,
            es_current: es.max_current(),
            grid_cap: 14_000.0,
        },
        es,
        requests,
        weights: CostWeights {
            elec_price: price,
            deferral_weight: 6e-7,
            comfort_weight: vec![0.02; n],
            band_linear: 1.0,
            band_quadratic: 10.0,
            cap_penalty: 1.0,
            terminal_value: 0.5 * cheap * 0.95,
        },
    };
    p.validate()?;
    Ok(p)
}
