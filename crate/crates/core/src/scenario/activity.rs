//! Seeded generator of occupant activities, appliance requests and vehicle trips.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{HemError, Result};
use crate::plant::{ActivityKind, Appliance, DeferrableKind};

/// Simulated span. Day indices count from January 1st, which is taken as a Monday.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calendar {
    pub start_day: u32,
    pub days: u32,
    pub dt: f64,
}

impl Calendar {
    pub fn validate(&self) -> Result<()> {
        let per_day = 86_400.0 / self.dt;
        if !(self.dt > 0.0) || per_day.fract() != 0.0 {
            return Err(HemError::Config(format!("dt = {} s must divide one day", self.dt)));
        }
        Ok(())
    }

    pub fn steps_per_day(&self) -> usize {
        (86_400.0 / self.dt).round() as usize
    }

    pub fn n_steps(&self) -> usize {
        self.days as usize * self.steps_per_day()
    }

    /// Seconds since January 1st at the start of the run.
    pub fn start_time(&self) -> f64 {
        self.start_day as f64 * 86_400.0
    }

    pub fn is_weekend(&self, day_offset: u32) -> bool {
        (self.start_day + day_offset) % 7 >= 5
    }

    fn step_at(&self, day: u32, hour: f64) -> usize {
        day as usize * self.steps_per_day() + (hour * 3600.0 / self.dt).round() as usize
    }
}

/// Relative likelihood of starting an activity in each part of the day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeOfDayWeights {
    pub kind: ActivityKind,
    /// 05–11 h.
    pub morning: f64,
    /// 11–17 h.
    pub midday: f64,
    /// 17–22 h.
    pub evening: f64,
    /// 22–05 h.
    pub night: f64,
    pub min_minutes: u32,
    pub max_minutes: u32,
}

impl TimeOfDayWeights {
    fn at(&self, hour: f64) -> f64 {
        match hour {
            h if (5.0..11.0).contains(&h) => self.morning,
            h if (11.0..17.0).contains(&h) => self.midday,
            h if (17.0..22.0).contains(&h) => self.evening,
            _ => self.night,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivityModel {
    pub occupants: u32,
    pub wake_h: f64,
    pub sleep_h: f64,
    pub jitter_h: f64,
    /// Probability an occupant is away (zero load) during weekday working hours.
    pub weekday_away_prob: f64,
    pub away_h: (f64, f64),
    pub weights: Vec<TimeOfDayWeights>,
    pub dishwasher_prob: f64,
    pub laundry_prob: f64,
    /// Steps between a request's enable time and its deadline.
    pub window_steps: usize,
}

impl Default for ActivityModel {
    fn default() -> Self {
        let w = |kind, morning, midday, evening, night, min_minutes, max_minutes| TimeOfDayWeights {
            kind,
            morning,
            midday,
            evening,
            night,
            min_minutes,
            max_minutes,
        };
        Self {
            occupants: 2,
            wake_h: 7.0,
            sleep_h: 23.0,
            jitter_h: 1.0,
            weekday_away_prob: 0.8,
            away_h: (8.5, 17.0),
            weights: vec![
                w(ActivityKind::Cooking, 0.15, 0.10, 0.25, 0.02, 20, 60),
                w(ActivityKind::Cleaning, 0.08, 0.10, 0.05, 0.01, 20, 60),
                w(ActivityKind::Leisure, 0.25, 0.30, 0.45, 0.40, 30, 120),
                w(ActivityKind::NoPower, 0.52, 0.50, 0.25, 0.57, 30, 120),
            ],
            dishwasher_prob: 0.8,
            laundry_prob: 0.5,
            window_steps: 48,
        }
    }
}

impl ActivityModel {
    pub fn validate(&self) -> Result<()> {
        let p = |x: f64| (0.0..=1.0).contains(&x);
        if !(p(self.dishwasher_prob) && p(self.laundry_prob) && p(self.weekday_away_prob)) {
            return Err(HemError::Config("activity probabilities must lie in [0, 1]".into()));
        }
        if self.weights.is_empty()
            || self
                .weights
                .iter()
                .any(|w| w.min_minutes == 0 || w.max_minutes < w.min_minutes)
        {
            return Err(HemError::Config("activity weights need positive, ordered durations".into()));
        }
        if self.weights.iter().any(|w| Appliance::of(w.kind).deferrable) {
            return Err(HemError::Config(
                "deferrable appliances cannot appear as occupant activities".into(),
            ));
        }
        if self.window_steps == 0 {
            return Err(HemError::Config("request window must be at least one step".into()));
        }
        if !(self.wake_h < self.sleep_h) {
            return Err(HemError::Config("wake hour must precede sleep hour".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvUsage {
    pub weekday_plug_in_h: (f64, f64),
    pub weekend_plug_in_h: (f64, f64),
    pub weekend_use_prob: f64,
    pub miles_mean: f64,
    pub miles_sd: f64,
    pub max_miles: f64,
    pub kwh_per_mile: f64,
}

impl Default for EvUsage {
    fn default() -> Self {
        Self {
            weekday_plug_in_h: (17.0, 19.0),
            weekend_plug_in_h: (12.0, 20.0),
            weekend_use_prob: 0.5,
            miles_mean: 35.0,
            miles_sd: 15.0,
            max_miles: 150.0,
            kwh_per_mile: 0.3,
        }
    }
}

impl EvUsage {
    pub fn validate(&self) -> Result<()> {
        if !(self.miles_sd >= 0.0 && self.kwh_per_mile > 0.0 && self.max_miles >= 0.0) {
            return Err(HemError::Config("EV usage needs sd >= 0, efficiency > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.weekend_use_prob) {
            return Err(HemError::Config("weekend EV use probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Plug-in SOC after a day's driving, assuming the car left at the 80% target.
pub fn ev_initial_soc(miles: f64, kwh_per_mile: f64, capacity_kwh: f64) -> f64 {
    (0.8 - miles * kwh_per_mile / capacity_kwh).clamp(0.0, 0.8)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub occupant: u32,
    pub kind: ActivityKind,
    pub start_step: usize,
    pub duration_steps: usize,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvTrip {
    pub miles: f64,
    pub soc0: f64,
}

/// A deferrable request. `deadline_step` is exclusive: the load must run
/// within `[enable_step, deadline_step)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: usize,
    pub kind: DeferrableKind,
    pub enable_step: usize,
    pub deadline_step: usize,
    pub completion_steps: usize,
    pub trip: Option<EvTrip>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActivityStream {
    pub events: Vec<ActivityEvent>,
    /// Laundry and dishwasher requests; vehicle trips come from [`gen_ev_trips`].
    pub requests: Vec<Request>,
}

impl ActivityStream {
    /// Household non-deferrable power per step (W).
    pub fn non_deferrable_power(&self, n_steps: usize) -> Vec<f64> {
        let mut p = vec![0.0; n_steps];
        for e in &self.events {
            let end = (e.start_step + e.duration_steps).min(n_steps);
            for v in p.iter_mut().take(end).skip(e.start_step) {
                *v += e.power;
            }
        }
        p
    }
}

fn uniform_h<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn pick<'a, R: Rng>(rng: &mut R, weights: &'a [TimeOfDayWeights], hour: f64) -> &'a TimeOfDayWeights {
    let total: f64 = weights.iter().map(|w| w.at(hour)).sum();
    if total <= 0.0 {
        return &weights[0];
    }
    let mut x = rng.gen_range(0.0..total);
    for w in weights {
        x -= w.at(hour);
        if x < 0.0 {
            return w;
        }
    }
    weights.last().expect("nonempty weights")
}

/// Occupant activities plus laundry/dishwasher requests. Deadlines are cut at
/// the end of the calendar and requests that could not finish are dropped.
pub fn gen_activities(seed: u64, model: &ActivityModel, cal: &Calendar) -> Result<ActivityStream> {
    model.validate()?;
    cal.validate()?;
    let n = cal.n_steps();
    let spd = cal.steps_per_day();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut events = Vec::new();

    for occ in 0..model.occupants {
        for d in 0..cal.days {
            let wake = cal.step_at(
                d,
                uniform_h(&mut rng, (model.wake_h - model.jitter_h, model.wake_h + model.jitter_h)),
            );
            let sleep = cal.step_at(
                d,
                uniform_h(&mut rng, (model.sleep_h - model.jitter_h, model.sleep_h + model.jitter_h)),
            );
            let day_end = (d as usize + 1) * spd;
            let sleep = sleep.min(day_end);
            let away = (!cal.is_weekend(d) && rng.gen_bool(model.weekday_away_prob))
                .then(|| (cal.step_at(d, model.away_h.0), cal.step_at(d, model.away_h.1)));

            let mut push = |kind: ActivityKind, start: usize, end: usize| {
                if end > start {
                    events.push(ActivityEvent {
                        occupant: occ,
                        kind,
                        start_step: start,
                        duration_steps: end - start,
                        power: Appliance::of(kind).power,
                    });
                }
            };
            let day_start = d as usize * spd;
            push(ActivityKind::Sleeping, day_start, wake);
            let mut at = wake;
            while at < sleep {
                if let Some((a0, a1)) = away {
                    if at >= a0 && at < a1 {
                        let end = a1.min(sleep);
                        push(ActivityKind::NoPower, at, end);
                        at = end;
                        continue;
                    }
                }
                let hour = ((at - day_start) as f64 * cal.dt) / 3600.0;
                let w = pick(&mut rng, &model.weights, hour);
                let minutes = rng.gen_range(w.min_minutes..=w.max_minutes) as f64;
                let len = ((minutes * 60.0 / cal.dt).round() as usize).max(1);
                let mut end = (at + len).min(sleep);
                if let Some((a0, _)) = away {
                    if at < a0 && end > a0 {
                        end = a0;
                    }
                }
                push(w.kind, at, end);
                at = end;
            }
            push(ActivityKind::Sleeping, sleep, day_end);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut requests = Vec::new();
    for d in 0..cal.days {
        let weekend = cal.is_weekend(d);
        if rng.gen_bool(model.dishwasher_prob) {
            let h = if rng.gen_bool(0.7) {
                uniform_h(&mut rng, (19.0, 22.0))
            } else {
                uniform_h(&mut rng, (7.0, 10.0))
            };
            requests.push((DeferrableKind::Dishwasher, cal.step_at(d, h)));
        }
        if rng.gen_bool(model.laundry_prob) {
            let h = if weekend {
                uniform_h(&mut rng, (9.0, 17.0))
            } else {
                uniform_h(&mut rng, (17.0, 21.0))
            };
            requests.push((DeferrableKind::Laundry, cal.step_at(d, h)));
        }
    }
    requests.sort_by_key(|&(kind, k)| (k, kind));
    let requests = requests
        .into_iter()
        .filter_map(|(kind, enable)| {
            let c = kind.cycle_profile(cal.dt).len();
            let deadline = (enable + model.window_steps).min(n);
            (enable + c <= deadline).then_some((kind, enable, deadline, c))
        })
        .enumerate()
        .map(|(id, (kind, enable_step, deadline_step, completion_steps))| Request {
            id,
            kind,
            enable_step,
            deadline_step,
            completion_steps,
            trip: None,
        })
        .collect();

    Ok(ActivityStream { events, requests })
}

/// Vehicle plug-in events: every weekday evening and on weekend days with the
/// configured probability. `completion_steps` is left at zero for the caller
/// to fill from the charging model.
pub fn gen_ev_trips(seed: u64, usage: &EvUsage, capacity_kwh: f64, window_steps: usize, cal: &Calendar) -> Result<Vec<Request>> {
    usage.validate()?;
    cal.validate()?;
    let n = cal.n_steps();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let miles_dist = Normal::new(usage.miles_mean, usage.miles_sd.max(1e-12))
        .map_err(|e| HemError::Config(format!("EV miles distribution: {e}")))?;
    let mut out = Vec::new();
    for d in 0..cal.days {
        let weekend = cal.is_weekend(d);
        if weekend && !rng.gen_bool(usage.weekend_use_prob) {
            continue;
        }
        let h = uniform_h(
            &mut rng,
            if weekend {
                usage.weekend_plug_in_h
            } else {
                usage.weekday_plug_in_h
            },
        );
        let miles = miles_dist.sample(&mut rng).clamp(0.0, usage.max_miles);
        let enable = cal.step_at(d, h);
        if enable >= n {
            continue;
        }
        out.push(Request {
            id: 0,
            kind: DeferrableKind::Ev,
            enable_step: enable,
            deadline_step: (enable + window_steps).min(n),
            completion_steps: 0,
            trip: Some(EvTrip {
                miles,
                soc0: ev_initial_soc(miles, usage.kwh_per_mile, capacity_kwh),
            }),
        });
    }
    Ok(out)
}
