//! Grid power cap check over a combined plan and selection of the tabu appliance.

use crate::optimizer::model::HorizonProblem;
use crate::optimizer::subproblems::{block_window, ev_window, Actuator, ControlPlan, TabuSet};
use crate::plant::DeferrableKind;

#[derive(Debug, Clone, PartialEq)]
pub struct TabuAppliance {
    pub actuator: Actuator,
    /// Horizon steps at which the grid cap is exceeded.
    pub steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CapCheck {
    Ok,
    Tabu(TabuAppliance),
    /// Violated, and no remaining actuator can be barred from the violating steps.
    Unresolved {
        steps: Vec<usize>,
    },
}

/// Horizon steps whose grid draw exceeds the cap.
pub fn violating_steps(plan: &ControlPlan, p: &HorizonProblem) -> Vec<usize> {
    let (_, snaps, _) = plan.power_series(p);
    snaps
        .iter()
        .enumerate()
        .filter(|(_, s)| s.grid > p.limits.grid_cap + 1e-9)
        .map(|(k, _)| k)
        .collect()
}

fn stays_feasible(p: &HorizonProblem, tabu: &TabuSet, a: Actuator, steps: &[usize]) -> bool {
    let mut t = tabu.clone();
    t.forbid(a, steps);
    match a {
        Actuator::Hvac => true,
        Actuator::Ev => p.request(DeferrableKind::Ev).is_some_and(|r| {
            let (allowed, count) = ev_window(p, r, &t);
            count <= allowed.len()
        }),
        Actuator::Laundry | Actuator::Dishwasher => {
            let kind = if a == Actuator::Laundry {
                DeferrableKind::Laundry
            } else {
                DeferrableKind::Dishwasher
            };
            p.request(kind)
                .filter(|r| r.served == 0)
                .is_some_and(|r| !block_window(p, r, &t).is_empty())
        }
    }
}

/// Checks the total grid draw of a combined plan against the cap. On a
/// violation the actuator drawing the most power over the violating steps is
/// proposed, skipping actuators already barred once and those that could no
/// longer meet their deadline.
pub fn capping_check(plan: &ControlPlan, p: &HorizonProblem, tabu: &TabuSet) -> CapCheck {
    let steps = violating_steps(plan, p);
    if steps.is_empty() {
        return CapCheck::Ok;
    }
    let mut ranked: Vec<(Actuator, f64)> = Actuator::ALL
        .iter()
        .filter(|a| !tabu.used().contains(a))
        .map(|&a| (a, steps.iter().map(|&k| plan.movable_power(p, a, k)).sum::<f64>()))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    match ranked.into_iter().find(|&(a, _)| stays_feasible(p, tabu, a, &steps)) {
        Some((actuator, _)) => CapCheck::Tabu(TabuAppliance { actuator, steps }),
        None => CapCheck::Unresolved { steps },
    }
}

/// Last resort after the tabu passes: storage stops charging and discharges
/// as far as the net load allows at the violating steps.
pub fn shed_storage(plan: &mut ControlPlan, p: &HorizonProblem, steps: &[usize]) {
    for &k in steps {
        plan.u_es[k] = plan.u_es[k].max(p.limits.es_current);
    }
}
