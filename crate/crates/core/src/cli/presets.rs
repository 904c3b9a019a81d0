//! Scenario presets modeled on landmark Bell tests.
//!
//! Every preset simulates an ideal `|Ψ+⟩` source at the Tsirelson settings.
//! Only the geometry, setting source, detector efficiency and heralding follow
//! the historical experiment. Lab geometry is in meters with time in meters of
//! light travel; cosmic setting sources are given in light-years and converted.

use serde::{Deserialize, Serialize};

use crate::engine::{ExperimentConfig, Geometry, Physics, SettingSource, Timing};
use crate::quantum::{make_bell_state, tsirelson_settings, BellSign};
use crate::spacetime::SpacetimeEvent;

/// Meters per light-year (and per year of time, with `c = 1`).
pub const METERS_PER_LIGHT_YEAR: f64 = 9.460_730_472_580_8e15;

pub const PRESET_NAMES: [&str; 7] = [
    "freedman-clauser",
    "aspect",
    "weihs",
    "nist-ions",
    "delft",
    "cosmic-vienna",
    "cosmic-quasar",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    #[serde(rename = "S")]
    pub s: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPreset {
    pub name: String,
    pub description: String,
    pub config: ExperimentConfig,
    /// Published value, when the experiment reported `S`.
    pub reference: Option<Reference>,
    /// How the published result is quoted.
    pub reference_text: String,
    /// Loopholes closed or left open by the arrangement.
    pub notes: Vec<String>,
}

fn ideal_physics() -> Physics {
    Physics::Quantum {
        state: make_bell_state(BellSign::Plus),
        settings: tsirelson_settings(),
    }
}

fn star(t_years: f64, x_light_years: f64, label: &str) -> SpacetimeEvent {
    SpacetimeEvent {
        label: label.to_string(),
        t: t_years * METERS_PER_LIGHT_YEAR,
        x: [x_light_years * METERS_PER_LIGHT_YEAR, 0.0, 0.0],
    }
}

/// Build a preset at the given size. Unknown names give `None`.
pub fn preset(name: &str, trials: u64, seed: u64) -> Option<ScenarioPreset> {
    let mut config = ExperimentConfig::new(ideal_physics(), SettingSource::IidUniform, trials, seed);
    let (description, reference, reference_text, notes, geometry) = match name {
        "freedman-clauser" => {
            // settings fixed by hand, each joint setting held for a quarter of the run
            let block = (trials / 4).max(1);
            config.setting_source = SettingSource::QuasiPeriodic {
                period_a: 2 * block,
                period_b: block,
            };
            (
                "calcium cascade, polarizers about 4 m apart, settings changed by hand between blocks",
                Some(Reference { s: 2.388, se: 0.072 }),
                "2.388 ± 0.072",
                vec!["locality loophole open: settings fixed long before each emission".to_string()],
                Geometry::symmetric(
                    2.0,
                    Timing {
                        trial_period: 10.0,
                        choice_lead_a: 1e9,
                        choice_lead_b: 1e9,
                        measurement_latency_a: 3.0,
                        measurement_latency_b: 3.0,
                        ..Timing::default()
                    },
                ),
            )
        }
        "aspect" => {
            config.setting_source = SettingSource::QuasiPeriodic { period_a: 3, period_b: 4 };
            (
                "acousto-optic switches about 6 m from the source, switching every 10 ns",
                None,
                "violation by five standard deviations (no S quoted)",
                vec!["quasi-periodic switching: settings are predictable".to_string()],
                Geometry::symmetric(
                    6.0,
                    Timing {
                        trial_period: 30.0,
                        choice_lead_a: 2.0,
                        choice_lead_b: 2.0,
                        measurement_latency_a: 1.0,
                        measurement_latency_b: 1.0,
                        ..Timing::default()
                    },
                ),
            )
        }
        "weihs" => {
            config.efficiency_a = 0.22;
            config.efficiency_b = 0.22;
            (
                "stations 400 m apart, fast random switching during flight, about 5% coincidences",
                Some(Reference { s: 2.73, se: 0.02 }),
                "2.73 ± 0.02",
                vec![
                    "locality loophole closed".to_string(),
                    "fair-sampling loophole open: η well below 2(√2-1)".to_string(),
                ],
                Geometry::symmetric(
                    200.0,
                    Timing {
                        trial_period: 1000.0,
                        choice_lead_a: 30.0,
                        choice_lead_b: 30.0,
                        measurement_latency_a: 5.0,
                        measurement_latency_b: 5.0,
                        ..Timing::default()
                    },
                ),
            )
        }
        "nist-ions" => (
            "two trapped ions a few micrometers apart, nearly every run detected",
            Some(Reference { s: 2.25, se: 0.03 }),
            "2.25 ± 0.03",
            vec![
                "fair-sampling loophole closed".to_string(),
                "locality loophole open: measurement takes far longer than light crossing".to_string(),
            ],
            Geometry::symmetric(
                1.5e-6,
                Timing {
                    trial_period: 1e4,
                    choice_lead_a: 300.0,
                    choice_lead_b: 300.0,
                    measurement_latency_a: 300.0,
                    measurement_latency_b: 300.0,
                    ..Timing::default()
                },
            ),
        ),
        "delft" => {
            config.heralding_probability = 0.05;
            (
                "electron spins 1.3 km apart, entanglement heralded event by event",
                Some(Reference { s: 2.42, se: 0.20 }),
                "2.42 ± 0.20",
                vec![
                    "event-ready heralding: only heralded trials are analyzed".to_string(),
                    "locality and fair-sampling loopholes closed together".to_string(),
                ],
                Geometry::symmetric(
                    640.0,
                    Timing {
                        trial_period: 1e4,
                        choice_lead_a: 200.0,
                        choice_lead_b: 200.0,
                        measurement_latency_a: 900.0,
                        measurement_latency_b: 900.0,
                        ..Timing::default()
                    },
                ),
            )
        }
        "cosmic-vienna" | "cosmic-quasar" => {
            let (near, far, description, reference, text) = if name == "cosmic-vienna" {
                (
                    600.0,
                    1930.0,
                    "settings from Milky Way starlight emitted 600 and 1930 years ago",
                    Reference { s: 2.502, se: 0.042 },
                    "2.502 ± 0.042",
                )
            } else {
                (
                    7.78e9,
                    12.21e9,
                    "settings from quasar light emitted 7.78 and 12.21 billion years ago",
                    Reference { s: 2.646, se: 0.070 },
                    "2.646 ± 0.070",
                )
            };
            let mut g = Geometry::symmetric(
                500.0,
                Timing {
                    trial_period: 1e4,
                    choice_lead_a: 20.0,
                    choice_lead_b: 20.0,
                    measurement_latency_a: 10.0,
                    measurement_latency_b: 10.0,
                    ..Timing::default()
                },
            );
            g.setting_sources_a = vec![star(-near, near, "source_a")];
            g.setting_sources_b = vec![star(-far, -far, "source_b")];
            (
                description,
                Some(reference),
                text,
                vec![
                    "freedom-of-choice loophole pushed back to the emission of the setting photons".to_string(),
                    "flat-spacetime lookback; cosmological expansion not modeled".to_string(),
                ],
                g,
            )
        }
        _ => return None,
    };
    config.geometry = Some(geometry);
    Some(ScenarioPreset {
        name: name.to_string(),
        description: description.to_string(),
        config,
        reference,
        reference_text: reference_text.to_string(),
        notes,
    })
}
