//! Case studies, tariffs, weather and seeded household activity.

pub mod activity;
pub mod case;
pub mod data;
pub mod tou;
pub mod weather;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HemError, Result};
use crate::plant::{charge_profile, BatteryPack, Charger, HvacMode, HvacUnit, SolarArray, TemperatureSource, ThermalHouse};
use crate::trace::Trace;

pub use activity::{
    ev_initial_soc, gen_activities, gen_ev_trips, ActivityEvent, ActivityModel, ActivityStream, Calendar, EvTrip, EvUsage,
    Request, TimeOfDayWeights,
};
pub use case::{load_case, CaseStudy, Location};
pub use data::{DataSet, HouseParams, PvParams, DATA_DIR_ENV};
pub use tou::{TouSchedule, TouSegment};
pub use weather::Weather;

const FT2_TO_M2: f64 = 0.092_903_04;

/// Everything needed to realize one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub case: u32,
    pub seed: u64,
    pub start_day: u32,
    pub days: u32,
    pub dt: f64,
    /// Fixed floor area (ft²) instead of a draw from the case's range.
    pub house_area_ft2: Option<f64>,
    /// Indoor temperature at the start; defaults to the first setpoint.
    pub initial_indoor_c: Option<f64>,
    pub pv_area_m2: f64,
    pub es_voltage: f64,
    pub es_initial_soc: f64,
    pub ev_voltage: f64,
    pub round_trip_eff: f64,
    pub ev_temperature_c: f64,
    pub charger: Charger,
    pub heat_setpoint: f64,
    pub cool_setpoint: f64,
    /// Length of the trailing ambient mean that selects heating or cooling.
    pub season_window_h: f64,
    pub weather_file: Option<PathBuf>,
    pub tou: TouSchedule,
    pub activity: ActivityModel,
    pub ev: EvUsage,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            case: 1,
            seed: 1,
            start_day: 182,
            days: 7,
            dt: 600.0,
            house_area_ft2: None,
            initial_indoor_c: None,
            pv_area_m2: 25.0,
            es_voltage: 50.0,
            es_initial_soc: 0.2,
            ev_voltage: 350.0,
            round_trip_eff: 0.95,
            ev_temperature_c: 25.0,
            charger: Charger::default(),
            heat_setpoint: 22.0,
            cool_setpoint: 18.0,
            season_window_h: 24.0,
            weather_file: None,
            tou: TouSchedule::default(),
            activity: ActivityModel::default(),
            ev: EvUsage::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn calendar(&self) -> Calendar {
        Calendar {
            start_day: self.start_day,
            days: self.days,
            dt: self.dt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        load_case(self.case)?;
        self.calendar().validate()?;
        self.tou.validate()?;
        self.activity.validate()?;
        self.ev.validate()?;
        if self.days == 0 {
            return Err(HemError::Config("days must be >= 1".into()));
        }
        if !(self.pv_area_m2 >= 0.0 && self.es_voltage > 0.0 && self.ev_voltage > 0.0) {
            return Err(HemError::Config("PV area must be >= 0 and pack voltages > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.es_initial_soc) {
            return Err(HemError::Config("initial ES SOC must lie in [0, 1]".into()));
        }
        if !(self.round_trip_eff > 0.0 && self.round_trip_eff <= 1.0) {
            return Err(HemError::Config("round-trip efficiency must lie in (0, 1]".into()));
        }
        if let Some(a) = self.house_area_ft2 {
            if !(a > 0.0) {
                return Err(HemError::Config("house area must be > 0".into()));
            }
        }
        if !(self.season_window_h > 0.0) {
            return Err(HemError::Config("season window must be > 0".into()));
        }
        Ok(())
    }
}

/// A realized scenario: every disturbance sampled at the start of each step.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub case: CaseStudy,
    pub calendar: Calendar,
    pub house_area_ft2: f64,
    pub house: ThermalHouse,
    pub hvac: HvacUnit,
    pub es: BatteryPack,
    /// Vehicle pack at the charging target; its SOC is reset at each plug-in.
    pub ev: BatteryPack,
    /// Seconds since January 1st for each step.
    pub time: Vec<f64>,
    pub ambient: Vec<f64>,
    pub irradiance: Vec<f64>,
    pub solar: Vec<f64>,
    pub non_deferrable: Vec<f64>,
    pub price: Vec<f64>,
    pub mode: Vec<HvacMode>,
    pub t_set: Vec<f64>,
    pub requests: Vec<Request>,
    pub activities: ActivityStream,
    pub fingerprint: String,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig, data: &DataSet) -> Result<Self> {
        config.validate()?;
        let case = load_case(config.case)?;
        let cal = config.calendar();
        let n = cal.n_steps();
        let dt = config.dt;
        let t0 = cal.start_time();

        let weather = match &config.weather_file {
            Some(p) => Weather::from_path(p)?,
            None => Weather::from_csv(&data.weather_csv(case.location)?)?,
        };
        let (ambient, irradiance) = weather.resample(t0, dt, n)?;
        let window = ((config.season_window_h * 3600.0 / dt).round() as usize).max(1);
        let season_ambient = trailing_mean(&weather, t0, dt, n, window)?;

        let mut rng_area = {
            use rand::SeedableRng;
            let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
            r.set_stream(4);
            r
        };
        let house_area_ft2 = match config.house_area_ft2 {
            Some(a) => a,
            None => {
                use rand::Rng;
                let (lo, hi) = case.house_area_ft2;
                rng_area.gen_range(lo..hi).round()
            }
        };

        let mut hvac = data.hvac.clone();
        hvac.mass_flow = data.house.hvac_mass_flow_per_1000_ft2 * house_area_ft2 / 1000.0;
        let mode: Vec<HvacMode> = season_ambient.iter().map(|&a| hvac.mode_for(a)).collect();
        let t_set: Vec<f64> = mode
            .iter()
            .map(|m| match m {
                HvacMode::Heat => config.heat_setpoint,
                HvacMode::Cool => config.cool_setpoint,
            })
            .collect();

        let area_m2 = house_area_ft2 * FT2_TO_M2;
        let hp = &data.house;
        let house = ThermalHouse {
            air_mass: area_m2 * hp.ceiling_height_m * hp.air_density * hp.effective_mass_factor,
            cv_air: hp.cv_air,
            thermal_resistance: 1.0 / (hp.ua_per_floor_m2 * area_m2),
            indoor_temp: config.initial_indoor_c.unwrap_or(t_set[0]),
        };
        house.validate()?;

        let es_source = if case.es_temp_controlled {
            TemperatureSource::Indoor
        } else {
            TemperatureSource::Ambient
        };
        let es = BatteryPack::sized(
            data.cell.clone(),
            case.es_capacity_kwh * 1000.0,
            config.es_voltage,
            config.round_trip_eff,
            config.es_initial_soc,
            es_source,
        )?;
        let ev = BatteryPack::sized(
            data.cell.clone(),
            case.xev_capacity_kwh * 1000.0,
            config.ev_voltage,
            config.round_trip_eff,
            config.charger.target_soc,
            TemperatureSource::Fixed(config.ev_temperature_c),
        )?;

        let time: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
        let price: Vec<f64> = time.iter().map(|&t| config.tou.price(t)).collect();
        let pv = SolarArray::new(
            config.pv_area_m2.max(f64::MIN_POSITIVE),
            data.pv.efficiency.clone(),
            Trace::constant(0.0, 1.0, 0.0),
        )?;
        let solar = if config.pv_area_m2 > 0.0 {
            irradiance
                .iter()
                .zip(&ambient)
                .map(|(&g, &a)| pv.power_from_irradiance(g, a))
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![0.0; n]
        };

        let activities = gen_activities(config.seed, &config.activity, &cal)?;
        let non_deferrable = activities.non_deferrable_power(n);
        let mut requests = activities.requests.clone();
        for mut r in gen_ev_trips(
            config.seed,
            &config.ev,
            case.xev_capacity_kwh,
            config.activity.window_steps,
            &cal,
        )? {
            let trip = r.trip.expect("vehicle requests carry a trip");
            let mut pack = ev.clone();
            pack.soc = trip.soc0;
            let c = charge_profile(&pack, &config.charger, config.ev_temperature_c, dt, n)?.len();
            if c == 0 || r.enable_step + c > n {
                continue;
            }
            r.completion_steps = c;
            r.deadline_step = (r.enable_step + config.activity.window_steps.max(c)).min(n);
            requests.push(r);
        }
        requests.sort_by_key(|r| (r.enable_step, r.kind));
        for (i, r) in requests.iter_mut().enumerate() {
            r.id = i;
        }

        let mut s = Self {
            config: config.clone(),
            case,
            calendar: cal,
            house_area_ft2,
            house,
            hvac,
            es,
            ev,
            time,
            ambient,
            irradiance,
            solar,
            non_deferrable,
            price,
            mode,
            t_set,
            requests,
            activities,
            fingerprint: String::new(),
        };
        s.fingerprint = s.compute_fingerprint()?;
        Ok(s)
    }

    pub fn n_steps(&self) -> usize {
        self.time.len()
    }

    pub fn dt(&self) -> f64 {
        self.calendar.dt
    }

    /// SHA-256 over the realized disturbances, requests and plant parameters.
    fn compute_fingerprint(&self) -> Result<String> {
        let mut h = Sha256::new();
        let mut v = serde_json::to_value(self)?;
        if let Some(o) = v.as_object_mut() {
            o.remove("fingerprint");
        }
        h.update(serde_json::to_vec(&v)?);
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Mean ambient over the `window` samples ending at each step, reaching back
/// before the run when the trace allows it.
fn trailing_mean(weather: &Weather, t0: f64, dt: f64, n: usize, window: usize) -> Result<Vec<f64>> {
    let lead = window - 1;
    let first = t0 - lead as f64 * dt;
    let avail = if first >= weather.ambient.start() {
        lead
    } else {
        ((t0 - weather.ambient.start()) / dt).floor().max(0.0) as usize
    };
    let (series, _) = weather.resample(t0 - avail as f64 * dt, dt, n + avail)?;
    let mut out = Vec::with_capacity(n);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, &a) in series.iter().enumerate() {
        sum += a;
        count += 1;
        if count > window {
            sum -= series[i - window];
            count = window;
        }
        if i >= avail {
            out.push(sum / count as f64);
        }
    }
    Ok(out)
}
