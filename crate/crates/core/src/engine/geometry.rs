use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spacetime::SpacetimeEvent;

use super::{TrialLog, EVENT_LABELS};

fn one() -> f64 {
    1.0
}

/// Per-trial timing, in the same length unit as the positions (`c = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Time between consecutive emissions.
    #[serde(default)]
    pub trial_period: f64,
    /// Photon speed as a fraction of `c`.
    #[serde(default = "one")]
    pub photon_speed: f64,
    /// How long before the photon arrives the setting at each station is fixed.
    #[serde(default)]
    pub choice_lead_a: f64,
    #[serde(default)]
    pub choice_lead_b: f64,
    /// Delay from photon arrival to a registered outcome.
    #[serde(default)]
    pub measurement_latency_a: f64,
    #[serde(default)]
    pub measurement_latency_b: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            trial_period: 0.0,
            photon_speed: 1.0,
            choice_lead_a: 0.0,
            choice_lead_b: 0.0,
            measurement_latency_a: 0.0,
            measurement_latency_b: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub source: [f64; 3],
    pub station_a: [f64; 3],
    pub station_b: [f64; 3],
    pub timing: Timing,
    /// Emissions that fixed the settings (e.g. starlight), for exclusion-time reports.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub setting_sources_a: Vec<SpacetimeEvent>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub setting_sources_b: Vec<SpacetimeEvent>,
}

impl Geometry {
    /// Source at the origin, stations at `±half_separation` on the x axis (A at +).
    pub fn symmetric(half_separation: f64, timing: Timing) -> Self {
        Geometry {
            source: [0.0; 3],
            station_a: [half_separation, 0.0, 0.0],
            station_b: [-half_separation, 0.0, 0.0],
            timing,
            setting_sources_a: Vec::new(),
            setting_sources_b: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.timing;
        for (name, v) in [
            ("trial_period", t.trial_period),
            ("choice_lead_a", t.choice_lead_a),
            ("choice_lead_b", t.choice_lead_b),
            ("measurement_latency_a", t.measurement_latency_a),
            ("measurement_latency_b", t.measurement_latency_b),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        if !(t.photon_speed > 0.0 && t.photon_speed <= 1.0) {
            return Err(Error::domain(format!("photon_speed must lie in (0, 1], got {}", t.photon_speed)));
        }
        let coords = self.source.iter().chain(&self.station_a).chain(&self.station_b);
        if coords.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("station coordinates must be finite"));
        }
        Ok(())
    }

    /// The five events of trial `index`, in [`EVENT_LABELS`] order, as
    /// `[t, x, y, z]`.
    pub fn trial_events(&self, index: u64) -> [[f64; 4]; 5] {
        let t = &self.timing;
        let emit = index as f64 * t.trial_period;
        let dist = |p: &[f64; 3]| (0..3).map(|i| (p[i] - self.source[i]).powi(2)).sum::<f64>().sqrt();
        let arrive_a = emit + dist(&self.station_a) / t.photon_speed;
        let arrive_b = emit + dist(&self.station_b) / t.photon_speed;
        let at = |time: f64, p: &[f64; 3]| [time, p[0], p[1], p[2]];
        [
            at(arrive_a - t.choice_lead_a, &self.station_a),
            at(arrive_b - t.choice_lead_b, &self.station_b),
            at(emit, &self.source),
            at(arrive_a + t.measurement_latency_a, &self.station_a),
            at(arrive_b + t.measurement_latency_b, &self.station_b),
        ]
    }

    pub fn spacetime_events(&self, index: u64) -> [SpacetimeEvent; 5] {
        let coords = self.trial_events(index);
        std::array::from_fn(|i| SpacetimeEvent {
            label: EVENT_LABELS[i].to_string(),
            t: coords[i][0],
            x: [coords[i][1], coords[i][2], coords[i][3]],
        })
    }
}

/// Give every trial its choice, emission and outcome events.
pub fn attach_geometry(mut log: TrialLog, geometry: &Geometry) -> Result<TrialLog> {
    geometry.validate()?;
    for r in log.records.iter_mut() {
        r.events = Some(Box::new(geometry.trial_events(r.index)));
    }
    Ok(log)
}
