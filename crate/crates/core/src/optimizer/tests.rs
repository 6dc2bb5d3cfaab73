use super::oracle::*;
use super::*;
use crate::ga::GaSettings;
use crate::plant::{charge_profile, Charger, HvacMode};
use crate::scenario::{DataSet, ScenarioConfig};
use crate::sim::step_plant;
use proptest::prelude::*;

const LEVELS: [f64; 3] = [-1.0, 0.0, 1.0];

fn opts<'a>(ga: &'a GaSettings, levels: Option<&'a [f64]>, seed: u64) -> SolveOptions<'a> {
    SolveOptions {
        ga,
        es_levels: levels,
        rng_seed: seed,
        rng_stream: 0,
        warm: None,
    }
}

fn currents(p: &HorizonProblem, fractions: &[f64]) -> Vec<f64> {
    let i = p.limits.es_current.min(p.es.max_current());
    fractions.iter().map(|f| f * i).collect()
}

fn close(a: f64, b: f64) -> bool {
    a <= b + 0.01 * b.abs() + 1e-9
}

fn desk(days: u32) -> Scenario {
    let cfg = ScenarioConfig {
        days,
        ..Default::default()
    };
    Scenario::build(&cfg, &DataSet::embedded().unwrap()).unwrap()
}

#[test]
fn setpoint_follows_reference_ambient() {
    assert_eq!(setpoint(25.0, 20.0, 22.0, 18.0), 18.0);
    assert_eq!(setpoint(10.0, 20.0, 22.0, 18.0), 22.0);
    assert_eq!(setpoint(20.0, 20.0, 22.0, 18.0), 22.0);
}

#[test]
fn horizon_shrinks_at_the_end() {
    let dt = 600.0;
    assert_eq!(shrink_horizon(0.0, 8.0 * 3600.0, 86_400.0), 8.0 * 3600.0);
    assert_eq!(shrink_horizon(86_400.0, 8.0 * 3600.0, 86_400.0), 0.0);
    assert_eq!(shrink_horizon(86_400.0 - 3.0 * dt, 8.0 * 3600.0, 86_400.0), 3.0 * dt);
}

fn request(kind: DeferrableKind, c: usize) -> ApplianceRequest {
    ApplianceRequest {
        id: 0,
        kind,
        enable_step: 0,
        deadline_step: 48,
        completion_steps: c,
        served: 0,
        power: vec![1800.0; c],
    }
}

#[test]
fn deferral_cost_is_linear_in_delay() {
    let r = request(DeferrableKind::Dishwasher, 6);
    assert_eq!(deferral_cost(6e-7, &r, &[0, 1, 2, 3, 4, 5]).unwrap(), 0.0);
    let ten: Vec<usize> = (10..16).collect();
    assert!((deferral_cost(6e-7, &r, &ten).unwrap() - 6e-7 * 10.0 * 6.0).abs() < 1e-18);
    let twenty: Vec<usize> = (20..26).collect();
    let (a, b) = (
        deferral_cost(6e-7, &r, &ten).unwrap(),
        deferral_cost(6e-7, &r, &twenty).unwrap(),
    );
    assert!((b - 2.0 * a).abs() < 1e-18);
    let mut late = r.clone();
    late.enable_step = 5;
    assert!(deferral_cost(6e-7, &late, &[4, 5, 6, 7, 8, 9]).is_err());
}

#[test]
fn build_horizon_freezes_observations() {
    let scn = desk(1);
    let state = PlantState::new(&scn);
    let cfg = OptimizerConfig::default();
    let p = build_horizon(&cfg, &scn, &state).unwrap().unwrap();
    assert_eq!(p.n_steps, 48);
    assert_eq!(p.ambient, scn.ambient[0]);
    assert_eq!(p.solar, scn.solar[0]);
    assert_eq!(p.t_set, 18.0);
    assert_eq!(p.weights.elec_price, scn.price[..48].to_vec());
    assert!(p.requests.iter().all(|r| r.enable_step == 0));

    let mut late = PlantState::new(&scn);
    late.step = scn.n_steps() - 3;
    assert_eq!(build_horizon(&cfg, &scn, &late).unwrap().unwrap().n_steps, 3);
    late.step = scn.n_steps();
    assert!(build_horizon(&cfg, &scn, &late).unwrap().is_none());
}

#[test]
fn no_requests_skip_later_stages() {
    let p = toy_problem(3, &ToySpec::hvac_only(6, HvacMode::Cool)).unwrap();
    let ga = GaSettings::default();
    let o = opts(&ga, Some(&LEVELS), 1);
    let tabu = TabuSet::new(6);
    let plan = solve_hvac_es(&p, &tabu, &o).unwrap();
    assert_eq!(solve_xev_es(&p, &plan, &tabu, &o).unwrap(), plan);
    assert_eq!(solve_appliances_es(&p, &plan, &plan, &tabu, &o).unwrap(), plan);
}

#[test]
fn mild_weather_without_comfort_weight_leaves_hvac_off() {
    let mut spec = ToySpec::hvac_only(6, HvacMode::Cool);
    spec.ambient = Some(18.0);
    let mut p = toy_problem(5, &spec).unwrap();
    p.initial.t_indoor = 18.0;
    p.weights.comfort_weight = vec![0.0; 6];
    p.solar = 0.0;
    let ga = GaSettings::default();
    let plan = solve_hvac_es(&p, &TabuSet::new(6), &opts(&ga, Some(&[0.0]), 2)).unwrap();
    assert!(plan.u_hvac.iter().all(|&u| u == 0.0));
    let expected: f64 = p.weights.elec_price.iter().map(|c| c * p.non_deferrable * p.dt / 3.6e6).sum();
    assert!((plan.objective - expected).abs() < 1e-12);
}

#[test]
fn hvac_ga_matches_enumeration_on_small_horizons() {
    let ga = GaSettings::default();
    for seed in 0..4 {
        let mode = if seed % 2 == 0 { HvacMode::Cool } else { HvacMode::Heat };
        let p = toy_problem(seed, &ToySpec::hvac_only(4, mode)).unwrap();
        let plan = solve_hvac_es(&p, &TabuSet::new(4), &opts(&ga, Some(&LEVELS), seed)).unwrap();
        let (best, _, _) = enumerate_hvac_es(&p, &currents(&p, &LEVELS)).unwrap();
        let again = objective_hvac_es(&p, &plan.u_hvac, &plan.u_es);
        assert!(
            (again - plan.objective).abs() < 1e-9,
            "evaluators disagree: {again} vs {}",
            plan.objective
        );
        assert!(
            close(plan.objective, best),
            "seed {seed}: GA {} vs optimum {best}",
            plan.objective
        );
    }
}

#[test]
fn price_spike_moves_cooling_earlier() {
    let mut p = toy_problem(11, &ToySpec::hvac_only(5, HvacMode::Cool)).unwrap();
    p.solar = 0.0;
    p.weights.elec_price = vec![0.1; 5];
    let (_, flat, _) = enumerate_hvac_es(&p, &[0.0]).unwrap();
    p.weights.elec_price[3] = 2.0;
    p.weights.elec_price[4] = 2.0;
    let (_, spiked, _) = enumerate_hvac_es(&p, &[0.0]).unwrap();
    let sum = |u: &[f64], r: std::ops::RangeInclusive<usize>| -> f64 { r.map(|k| u[k]).sum() };
    assert!(sum(&spiked, 3..=4) < sum(&flat, 3..=4));
    assert!(sum(&spiked, 1..=2) >= sum(&flat, 1..=2));
}

fn ev_toy(seed: u64, n: usize, c: usize) -> HorizonProblem {
    let spec = ToySpec {
        ev_steps: Some(c),
        ..ToySpec::hvac_only(n, HvacMode::Cool)
    };
    toy_problem(seed, &spec).unwrap()
}

#[test]
fn charged_vehicle_is_skipped() {
    let mut p = ev_toy(1, 6, 2);
    p.requests[0].power.clear();
    let ga = GaSettings::default();
    let o = opts(&ga, Some(&LEVELS), 1);
    let plan = solve_hvac_es(&p, &TabuSet::new(6), &o).unwrap();
    let out = solve_xev_es(&p, &plan, &TabuSet::new(6), &o).unwrap();
    assert!(out.u_xev.iter().all(|&u| u == 0));
    assert_eq!(out, plan);
}

#[test]
fn vehicle_charges_in_cheap_window() {
    let ga = GaSettings::default();
    for seed in 0..3 {
        let mut p = ev_toy(seed, 8, 3);
        p.solar = 0.0;
        p.weights.elec_price = vec![0.26, 0.26, 0.26, 0.08, 0.08, 0.08, 0.08, 0.26];
        let o = opts(&ga, Some(&LEVELS), seed);
        let tabu = TabuSet::new(8);
        let hvac = solve_hvac_es(&p, &tabu, &o).unwrap();
        let plan = solve_xev_es(&p, &hvac, &tabu, &o).unwrap();
        let on: Vec<usize> = (0..8).filter(|&k| plan.u_xev[k] == 1).collect();
        assert_eq!(on.len(), 3);
        assert!(on.iter().all(|k| (3..7).contains(k)), "seed {seed}: {on:?}");
        let (best, steps, _) = enumerate_xev_es(&p, &hvac.loads, &(0..8).collect::<Vec<_>>(), 3, &currents(&p, &LEVELS)).unwrap();
        assert!(steps.iter().all(|k| (3..7).contains(k)));
        assert!(close(plan.objective, best));
    }
}

#[test]
fn vehicle_completion_steps_follow_energy_bookkeeping() {
    let data = DataSet::embedded().unwrap();
    let pack = crate::plant::BatteryPack::sized(
        data.cell.clone(),
        60_000.0,
        350.0,
        0.95,
        0.2,
        crate::plant::TemperatureSource::Fixed(25.0),
    )
    .unwrap();
    let c = charge_profile(&pack, &Charger::default(), 25.0, 600.0, 500).unwrap().len();
    let energy_kwh = 0.6 * pack.nominal_energy_wh() / 1000.0;
    let oracle = (energy_kwh / 0.95 / 7.56 / (600.0 / 3600.0)).ceil() as usize;
    assert!(c.abs_diff(oracle) <= 3, "profile {c} steps vs bookkeeping {oracle}");
}

fn appliance_toy(seed: u64, n: usize, laundry: Option<usize>, dish: Option<usize>) -> HorizonProblem {
    let spec = ToySpec {
        laundry_steps: laundry,
        dishwasher_steps: dish,
        ..ToySpec::hvac_only(n, HvacMode::Cool)
    };
    toy_problem(seed, &spec).unwrap()
}

#[test]
fn dishwasher_starts_immediately_at_flat_price() {
    let mut p = appliance_toy(4, 48, None, Some(6));
    p.weights.elec_price = vec![0.13; 48];
    let ga = GaSettings::default();
    let o = opts(&ga, Some(&[0.0]), 4);
    let tabu = TabuSet::new(48);
    let base = ControlPlan::idle(&p);
    let plan = solve_appliances_es(&p, &base, &base, &tabu, &o).unwrap();
    assert_eq!(plan.starts, vec![(DeferrableKind::Dishwasher, 0)]);
    let r = p.request(DeferrableKind::Dishwasher).unwrap();
    let window = block_window(&p, r, &tabu);
    assert_eq!(window.len(), 43);
    let (_, starts, _) = enumerate_appliances_es(&p, &base.loads, &[r], &[window], &[0.0]).unwrap();
    assert_eq!(starts, vec![0]);
}

#[test]
fn dishwasher_waits_for_cheap_window() {
    let mut p = appliance_toy(6, 48, None, Some(6));
    p.solar = 0.0;
    p.weights.elec_price = (0..48).map(|k| if (30..=40).contains(&k) { 0.08 } else { 0.26 }).collect();
    let ga = GaSettings::default();
    let base = ControlPlan::idle(&p);
    let plan = solve_appliances_es(&p, &base, &base, &TabuSet::new(48), &opts(&ga, Some(&[0.0]), 6)).unwrap();
    let s = plan.starts[0].1;
    assert!((30..=35).contains(&s), "start {s}");
}

#[test]
fn tight_cap_staggers_appliances() {
    let mut spec = ToySpec {
        laundry_steps: Some(3),
        dishwasher_steps: Some(3),
        ..ToySpec::hvac_only(8, HvacMode::Cool)
    };
    spec.ambient = Some(18.0);
    let mut p = toy_problem(8, &spec).unwrap();
    p.initial.t_indoor = 18.0;
    p.solar = 0.0;
    p.weights.elec_price = vec![0.08, 0.08, 0.08, 0.08, 0.26, 0.26, 0.26, 0.26];
    let peak = |k: DeferrableKind| p.request(k).unwrap().power.iter().copied().fold(0.0, f64::max);
    p.limits.grid_cap = p.non_deferrable + peak(DeferrableKind::Laundry).max(peak(DeferrableKind::Dishwasher)) + 50.0;
    let ga = GaSettings::default();
    let solved = solve_horizon(&p, &ga, Some(&[0.0]), 8, 0, None).unwrap();
    assert!(violating_steps(&solved.plan, &p).is_empty());
    let l = solved.plan.u_laundry.iter().position(|&u| u == 1).unwrap();
    let d = solved.plan.u_dishwasher.iter().position(|&u| u == 1).unwrap();
    assert!(l.abs_diff(d) >= 3, "laundry {l} dishwasher {d}");
}

fn dryer_fixture() -> (HorizonProblem, ControlPlan) {
    let mut spec = ToySpec::hvac_only(8, HvacMode::Cool);
    spec.ambient = Some(18.0);
    spec.laundry_steps = Some(5);
    let mut p = toy_problem(2, &spec).unwrap();
    p.solar = 0.0;
    p.non_deferrable = 11_000.0;
    p.initial.soc_es = 0.2;
    p.requests[0].power = vec![500.0, 500.0, 0.0, 3400.0, 3400.0];
    let mut plan = ControlPlan::idle(&p);
    plan.starts = vec![(DeferrableKind::Laundry, 2)];
    for k in 2..7 {
        plan.u_laundry[k] = 1;
        plan.loads.deferrable[k] = p.requests[0].power[k - 2];
    }
    (p, plan)
}

#[test]
fn capping_names_the_dryer() {
    let (p, plan) = dryer_fixture();
    let check = capping_check(&plan, &p, &TabuSet::new(8));
    assert_eq!(
        check,
        CapCheck::Tabu(TabuAppliance {
            actuator: Actuator::Laundry,
            steps: vec![5, 6]
        })
    );
    let ok = ControlPlan::idle(&p);
    assert_eq!(capping_check(&ok, &p, &TabuSet::new(8)), CapCheck::Ok);
}

#[test]
fn capping_loop_terminates_with_cap_met() {
    let (mut p, _) = dryer_fixture();
    p.initial.soc_es = 0.6;
    let ga = GaSettings::default();
    let solved = solve_horizon(&p, &ga, None, 3, 0, None).unwrap();
    assert!(violating_steps(&solved.plan, &p).is_empty());
    assert!(solved.tabu.len() <= Actuator::ALL.len());
}

#[test]
fn capping_loop_stops_when_no_actuator_can_move() {
    let (p, _) = dryer_fixture();
    let ga = GaSettings::default();
    let solved = solve_horizon(&p, &ga, Some(&[0.0]), 3, 0, None).unwrap();
    assert_eq!(solved.tabu, vec![Actuator::Laundry]);
    let left = violating_steps(&solved.plan, &p);
    assert_eq!(left.len(), 2);
    assert!(left.iter().all(|&k| solved.plan.u_laundry[k] == 1));
}

#[test]
fn comfortable_idle_home_stays_idle() {
    let mut spec = ToySpec::hvac_only(6, HvacMode::Heat);
    spec.ambient = Some(22.0);
    let mut p = toy_problem(9, &spec).unwrap();
    p.initial.t_indoor = 22.0;
    let ga = GaSettings::default();
    let solved = solve_horizon(&p, &ga, Some(&[0.0]), 9, 0, None).unwrap();
    let plan = solved.plan;
    assert!(plan.u_hvac.iter().all(|&u| u == 0.0));
    assert!(plan
        .u_xev
        .iter()
        .chain(&plan.u_laundry)
        .chain(&plan.u_dishwasher)
        .all(|&u| u == 0));
    assert!(solved.tabu.is_empty());
}

#[test]
fn mpc_step_is_deterministic_and_matches_the_plant() {
    let scn = desk(1);
    let cfg = OptimizerConfig::default();
    let mut state = PlantState::new(&scn);
    state.step = 110;
    state.t_indoor = 18.4;
    state.es.soc = 0.5;
    let a = mpc_step(&cfg, &scn, &state, None).unwrap().unwrap();
    let b = mpc_step(&cfg, &scn, &state, None).unwrap().unwrap();
    assert_eq!(a.decision.commands, b.decision.commands);
    assert_eq!(a.decision.telemetry.objective, b.decision.telemetry.objective);
    let untimed = |p: &ControlPlan| ControlPlan {
        max_solve_s: 0.0,
        ..p.clone()
    };
    assert_eq!(untimed(&a.plan), untimed(&b.plan));

    let (dispatch, snaps, socs) = a.plan.power_series(&a.problem);
    let temps = a.plan.temperatures(&a.problem);
    let mut plant = state.clone();
    let rec = step_plant(&scn, &mut plant, &a.decision.commands, (cfg.soc_min, cfg.soc_max)).unwrap();
    assert!((rec.grid - snaps[0].grid).abs() < 1e-6);
    assert!((rec.es_current - dispatch[0].current).abs() < 1e-9);
    assert!((rec.soc_es - socs[0]).abs() < 1e-12);
    assert!((rec.t_indoor - temps[0]).abs() < 1e-12);
}

#[test]
fn controller_week_keeps_bounds() {
    let scn = desk(2);
    let mut c = HemController::new(OptimizerConfig::default()).unwrap();
    let ledger = crate::sim::simulate(&scn, &mut c).unwrap();
    for s in &ledger.steps {
        assert!(s.snapshot().is_balanced(), "step {}", s.step);
        assert!(s.grid <= 14_000.0 + 1e-6);
        assert!((0.2 - 1e-9..=0.8 + 1e-9).contains(&s.soc_es));
        assert!(
            (s.t_indoor - s.t_set).abs() <= 1.0 || s.band_flag == 1,
            "step {} at {}",
            s.step,
            s.t_indoor
        );
    }
    for r in &ledger.requests {
        assert_eq!(r.served.len(), r.completion_steps);
        assert!(r.served.iter().all(|s| s.0 >= r.enable_step && s.0 < r.deadline_step));
    }
}

#[test]
fn config_validation() {
    assert!(OptimizerConfig::default().validate().is_ok());
    let bad = OptimizerConfig {
        soc_min: 0.9,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
    let bad = OptimizerConfig {
        es_levels: Some(vec![2.0]),
        ..Default::default()
    };
    assert!(bad.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn accepted_plans_respect_structure(seed in 0u64..1000, c_l in 1usize..4, c_d in 1usize..4, c_ev in 1usize..4) {
        let spec = ToySpec {
            ev_steps: Some(c_ev),
            laundry_steps: Some(c_l),
            dishwasher_steps: Some(c_d),
            ..ToySpec::hvac_only(8, if seed % 2 == 0 { HvacMode::Cool } else { HvacMode::Heat })
        };
        let p = toy_problem(seed, &spec).unwrap();
        let ga = GaSettings::default();
        let plan = solve_horizon(&p, &ga, None, seed, 0, None).unwrap().plan;
        prop_assert_eq!(plan.u_xev.iter().filter(|&&u| u == 1).count(), c_ev);
        for (u, c) in [(&plan.u_laundry, c_l), (&plan.u_dishwasher, c_d)] {
            let on: Vec<usize> = (0..8).filter(|&k| u[k] == 1).collect();
            prop_assert_eq!(on.len(), c);
            prop_assert_eq!(on[c - 1] - on[0] + 1, c);
        }
        let (_, snaps, socs) = plan.power_series(&p);
        for (s, soc) in snaps.iter().zip(&socs) {
            prop_assert!(s.is_balanced());
            prop_assert!(s.grid <= p.limits.grid_cap + 1e-6);
            prop_assert!((0.2 - 1e-9..=0.8 + 1e-9).contains(soc));
        }
        prop_assert!(plan.u_hvac.iter().all(|u| p.hvac.levels.contains(u)));
    }
}
