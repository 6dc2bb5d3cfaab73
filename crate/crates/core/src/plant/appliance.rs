use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    Washer,
    Dryer,
    Dishwasher,
    Cleaning,
    Cooking,
    Leisure,
    Sleeping,
    NoPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Appliance {
    pub name: ActivityKind,
    pub power: f64,
    /// Minutes; `None` for occupant activities whose length is sampled.
    pub duration: Option<u32>,
    pub deferrable: bool,
    pub interruptible: bool,
}

impl Appliance {
    pub const fn of(kind: ActivityKind) -> Self {
        let (power, duration, deferrable) = match kind {
            ActivityKind::Washer => (425.0, Some(30), true),
            ActivityKind::Dryer => (3400.0, Some(30), true),
            ActivityKind::Dishwasher => (1800.0, Some(60), true),
            ActivityKind::Cleaning => (1250.0, None, false),
            ActivityKind::Cooking => (1225.0, None, false),
            ActivityKind::Leisure => (300.0, None, false),
            ActivityKind::Sleeping => (0.0, None, false),
            ActivityKind::NoPower => (0.0, None, false),
        };
        Self {
            name: kind,
            power,
            duration,
            deferrable,
            interruptible: !deferrable,
        }
    }
}

/// Loads the coordinator may shift in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeferrableKind {
    /// All-in-one washer-dryer.
    Laundry,
    Dishwasher,
    Ev,
}

impl DeferrableKind {
    /// Per-step power of a non-interruptible cycle at step length `dt`.
    ///
    /// The laundry cycle is 90 minutes: 30 min wash, 30 min transfer/soak at
    /// no load, 30 min dry. The dishwasher runs 60 minutes at constant power.
    pub fn cycle_profile(self, dt: f64) -> Vec<f64> {
        let steps = |min: f64| ((min * 60.0 / dt).round() as usize).max(1);
        match self {
            DeferrableKind::Laundry => {
                let washer = Appliance::of(ActivityKind::Washer);
                let dryer = Appliance::of(ActivityKind::Dryer);
                let mut v = vec![washer.power; steps(washer.duration.unwrap() as f64)];
                v.extend(std::iter::repeat_n(0.0, steps(30.0)));
                v.extend(std::iter::repeat_n(dryer.power, steps(dryer.duration.unwrap() as f64)));
                v
            }
            DeferrableKind::Dishwasher => {
                let d = Appliance::of(ActivityKind::Dishwasher);
                vec![d.power; steps(d.duration.unwrap() as f64)]
            }
            DeferrableKind::Ev => Vec::new(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DeferrableKind::Laundry => "laundry",
            DeferrableKind::Dishwasher => "dishwasher",
            DeferrableKind::Ev => "ev",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_powers_and_durations() {
        assert_eq!(Appliance::of(ActivityKind::Cooking).power, 1225.0);
        assert_eq!(Appliance::of(ActivityKind::Cleaning).power, 1250.0);
        assert_eq!(Appliance::of(ActivityKind::Leisure).power, 300.0);
        assert_eq!(Appliance::of(ActivityKind::Sleeping).power, 0.0);
        let dryer = Appliance::of(ActivityKind::Dryer);
        assert_eq!((dryer.power, dryer.duration), (3400.0, Some(30)));
        assert!(!dryer.interruptible && dryer.deferrable);
        assert_eq!(Appliance::of(ActivityKind::Washer).power, 425.0);
        assert_eq!(Appliance::of(ActivityKind::Dishwasher).duration, Some(60));
    }

    #[test]
    fn completion_steps_at_ten_minutes() {
        assert_eq!(DeferrableKind::Laundry.cycle_profile(600.0).len(), 9);
        assert_eq!(DeferrableKind::Dishwasher.cycle_profile(600.0).len(), 6);
        let e: f64 = DeferrableKind::Laundry.cycle_profile(600.0).iter().sum::<f64>() / 6.0;
        assert!((e - (425.0 * 0.5 + 3400.0 * 0.5)).abs() < 1e-9);
    }
}
