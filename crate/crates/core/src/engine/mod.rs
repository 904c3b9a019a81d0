//! Seeded Monte Carlo generator of Bell-test trial logs.
//!
//! One trial is one emitted pair. Each trial draws a joint setting from the
//! [`SettingSource`], outcomes from the [`Physics`] model, then applies
//! independent detection thinning per side and a heralding flag.
//!
//! Randomness comes from ChaCha8 seeded with the configured seed. Each
//! component reads its own stream of that generator, so changing one
//! component leaves the others' draws untouched:
//!
//! | stream | consumer |
//! |---|---|
//! | 1 | setting source |
//! | 2 | physics model |
//! | 3 | detection thinning (two uniforms per trial, always drawn) |
//! | 4 | heralding (one uniform per trial, always drawn) |

mod geometry;
mod log;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chsh::{Outcome, SettingPair};
use crate::error::{Error, Result};
use crate::lhv::{
    one_bit_communication_model, sample_index, CommunicationModel, HiddenVariableModel, HistoryEntry, MemoryKind,
};
use crate::quantum::{joint_distribution, JointDistribution, PolarizationState, SettingsQuad};

pub use geometry::{attach_geometry, Geometry, Timing};
pub use log::{read_csv, read_csv_path, write_csv, write_csv_path, TrialLog, TrialRecord, EVENT_LABELS};

const STREAM_SOURCE: u64 = 1;
const STREAM_PHYSICS: u64 = 2;
const STREAM_DETECTION: u64 = 3;
const STREAM_HERALDING: u64 = 4;

/// Outcome generator for each trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Physics {
    Quantum {
        state: PolarizationState,
        settings: SettingsQuad,
    },
    Lhv {
        model: HiddenVariableModel,
    },
    Memory {
        strategy: MemoryKind,
    },
    /// Station B learns A's setting; not a local model.
    Communication {
        model: CommunicationModel,
    },
}

impl Physics {
    pub fn locality_violating(&self) -> bool {
        matches!(self, Physics::Communication { .. })
    }
}

fn uniform_settings() -> [f64; 4] {
    [0.25; 4]
}

/// Where the joint setting of each trial comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SettingSource {
    #[default]
    IidUniform,
    /// `p(a,b)` in joint-setting order.
    Biased { table: [f64; 4] },
    /// Setting index `(trial / period) mod 2` on each side.
    QuasiPeriodic { period_a: u64, period_b: u64 },
    /// Text file of `0`/`1` characters, two per trial (A then B). Whitespace is ignored.
    ExternalBitstream { path: PathBuf },
    /// Draw `λ` from the model's marginal, then the settings from `p(a,b|λ)`.
    /// The physics must be the same model, which then reuses that `λ`.
    AdversaryCorrelated {
        model: HiddenVariableModel,
        #[serde(default = "uniform_settings")]
        setting_distribution: [f64; 4],
    },
}

impl SettingSource {
    pub fn label(&self) -> &'static str {
        match self {
            SettingSource::IidUniform => "iid_uniform",
            SettingSource::Biased { .. } => "biased",
            SettingSource::QuasiPeriodic { .. } => "quasi_periodic",
            SettingSource::ExternalBitstream { .. } => "external_bitstream",
            SettingSource::AdversaryCorrelated { .. } => "adversary_correlated",
        }
    }

    /// Deterministic schedules an adversary could anticipate.
    pub fn predictable(&self) -> bool {
        matches!(self, SettingSource::QuasiPeriodic { .. })
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub physics: Physics,
    #[serde(default)]
    pub setting_source: SettingSource,
    #[serde(default = "one")]
    pub efficiency_a: f64,
    #[serde(default = "one")]
    pub efficiency_b: f64,
    /// Probability that a trial carries a heralding signal.
    #[serde(default = "one")]
    pub heralding_probability: f64,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
}

impl ExperimentConfig {
    /// Perfect detectors, every trial heralded, no geometry.
    pub fn new(physics: Physics, setting_source: SettingSource, trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            physics,
            setting_source,
            efficiency_a: 1.0,
            efficiency_b: 1.0,
            heralding_probability: 1.0,
            trials,
            seed,
            geometry: None,
        }
    }

    pub fn with_efficiency(mut self, eta_a: f64, eta_b: f64) -> Self {
        self.efficiency_a = eta_a;
        self.efficiency_b = eta_b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::usage("trials must be at least 1"));
        }
        for (name, eta) in [("efficiency_a", self.efficiency_a), ("efficiency_b", self.efficiency_b)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::usage(format!("{name} must lie in (0, 1], got {eta}")));
            }
        }
        let h = self.heralding_probability;
        if !(0.0..=1.0).contains(&h) {
            return Err(Error::usage(format!("heralding_probability must lie in [0, 1], got {h}")));
        }
        if let Physics::Communication { model } = &self.physics {
            one_bit_communication_model(*model.targets()).map_err(|e| Error::usage(e.to_string()))?;
        }
        if let Physics::Quantum { state, .. } = &self.physics {
            if (state.norm_sqr() - 1.0).abs() > 1e-9 {
                return Err(Error::usage("quantum state is not normalized"));
            }
        }
        match &self.setting_source {
            SettingSource::Biased { table } => check_table(table)?,
            SettingSource::QuasiPeriodic { period_a, period_b } => {
                if *period_a == 0 || *period_b == 0 {
                    return Err(Error::usage("quasi-periodic periods must be at least 1"));
                }
            }
            SettingSource::AdversaryCorrelated {
                model,
                setting_distribution,
            } => {
                check_table(setting_distribution)?;
                match &self.physics {
                    Physics::Lhv { model: m } if m == model => {}
                    _ => {
                        return Err(Error::usage(
                            "an adversary-correlated source needs lhv physics with the same model",
                        ))
                    }
                }
            }
            SettingSource::IidUniform | SettingSource::ExternalBitstream { .. } => {}
        }
        if let Some(g) = &self.geometry {
            g.validate()?;
        }
        Ok(())
    }
}

fn check_table(table: &[f64; 4]) -> Result<()> {
    if table.iter().any(|p| !(*p >= 0.0)) || (table.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::usage(format!("setting table {table:?} is not a probability vector")));
    }
    Ok(())
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Seed of replication `index` derived from a base seed (SplitMix64 finalizer
/// applied to `seed + (index + 1)·0x9E3779B97F4A7C15`).
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn read_bitstream(path: &PathBuf, trials: u64) -> Result<Vec<u8>> {
    let text = std::fs::read_to_string(path)?;
    let mut bits = Vec::new();
    for c in text.chars() {
        match c {
            '0' => bits.push(0),
            '1' => bits.push(1),
            c if c.is_whitespace() => {}
            other => {
                return Err(Error::domain(format!(
                    "bitstream {} contains '{other}'; expected only 0 and 1",
                    path.display()
                )))
            }
        }
    }
    let needed = 2 * trials as usize;
    if bits.len() < needed {
        return Err(Error::insufficient(format!(
            "bitstream {} has {} bits, {needed} needed for {trials} trials",
            path.display(),
            bits.len()
        )));
    }
    bits.truncate(needed);
    Ok(bits)
}

enum SourceState {
    Iid,
    Table([f64; 4]),
    Periodic(u64, u64),
    Bits(Vec<u8>),
    /// `p̄(λ)` and `p(a,b|λ)` for each λ.
    Correlated(Vec<f64>, Vec<[f64; 4]>),
}

impl SourceState {
    fn build(source: &SettingSource, trials: u64) -> Result<Self> {
        Ok(match source {
            SettingSource::IidUniform => SourceState::Iid,
            SettingSource::Biased { table } => SourceState::Table(*table),
            SettingSource::QuasiPeriodic { period_a, period_b } => SourceState::Periodic(*period_a, *period_b),
            SettingSource::ExternalBitstream { path } => SourceState::Bits(read_bitstream(path, trials)?),
            SettingSource::AdversaryCorrelated {
                model,
                setting_distribution,
            } => {
                let n = model.lambda_support().len();
                let mut marginal = vec![0.0; n];
                let mut joint = vec![[0.0; 4]; n];
                for pair in SettingPair::ALL {
                    let k = pair.index();
                    for (l, q) in model.prior_given(pair).iter().enumerate() {
                        joint[l][k] = q * setting_distribution[k];
                        marginal[l] += joint[l][k];
                    }
                }
                for (row, m) in joint.iter_mut().zip(&marginal) {
                    if *m > 0.0 {
                        row.iter_mut().for_each(|v| *v /= m);
                    }
                }
                SourceState::Correlated(marginal, joint)
            }
        })
    }

    /// Joint setting of trial `i`, plus `λ` when the source fixes it.
    fn draw(&self, i: u64, rng: &mut ChaCha8Rng) -> (SettingPair, Option<usize>) {
        match self {
            SourceState::Iid => (SettingPair::from_index(rng.random_range(0..4)), None),
            SourceState::Table(t) => (SettingPair::from_index(sample_index(t, rng)), None),
            SourceState::Periodic(pa, pb) => (
                SettingPair {
                    a: ((i / pa) % 2) as u8,
                    b: ((i / pb) % 2) as u8,
                },
                None,
            ),
            SourceState::Bits(bits) => {
                let j = 2 * i as usize;
                (SettingPair { a: bits[j], b: bits[j + 1] }, None)
            }
            SourceState::Correlated(marginal, joint) => {
                let l = sample_index(marginal, rng);
                (SettingPair::from_index(sample_index(&joint[l], rng)), Some(l))
            }
        }
    }
}

enum PhysicsState<'a> {
    Quantum([JointDistribution; 4]),
    Lhv(&'a HiddenVariableModel),
    Memory(Box<dyn crate::lhv::MemoryStrategy + Send>),
    Communication(&'a CommunicationModel),
}

impl<'a> PhysicsState<'a> {
    fn build(physics: &'a Physics) -> Result<Self> {
        Ok(match physics {
            Physics::Quantum { state, settings } => {
                let mut tables = [JointDistribution([[0.0; 2]; 2]); 4];
                for pair in SettingPair::ALL {
                    let (alpha, beta) = settings.angles(pair);
                    tables[pair.index()] = joint_distribution(state, alpha, beta)?;
                }
                PhysicsState::Quantum(tables)
            }
            Physics::Lhv { model } => PhysicsState::Lhv(model),
            Physics::Memory { strategy } => PhysicsState::Memory(strategy.build()),
            Physics::Communication { model } => PhysicsState::Communication(model),
        })
    }

    fn draw(&mut self, pair: SettingPair, lambda: Option<usize>, rng: &mut ChaCha8Rng) -> (Outcome, Outcome) {
        match self {
            PhysicsState::Quantum(tables) => {
                let t = &tables[pair.index()].0;
                let cell = sample_index(&[t[0][0], t[0][1], t[1][0], t[1][1]], rng);
                (Outcome::BINARY[cell / 2], Outcome::BINARY[cell % 2])
            }
            PhysicsState::Lhv(model) => {
                let l = lambda.unwrap_or_else(|| model.sample_lambda(pair, rng));
                model.sample_outcomes(l, pair, rng)
            }
            PhysicsState::Memory(strategy) => strategy.next_strategy().outcomes(pair),
            PhysicsState::Communication(model) => model.sample(pair, rng),
        }
    }
}

/// Generate a trial log. The config is validated before any trial runs.
pub fn run(config: &ExperimentConfig) -> Result<TrialLog> {
    config.validate()?;
    let source = SourceState::build(&config.setting_source, config.trials)?;
    let mut physics = PhysicsState::build(&config.physics)?;
    let mut source_rng = stream(config.seed, STREAM_SOURCE);
    let mut physics_rng = stream(config.seed, STREAM_PHYSICS);
    let mut detection_rng = stream(config.seed, STREAM_DETECTION);
    let mut herald_rng = stream(config.seed, STREAM_HERALDING);

    let mut records = Vec::with_capacity(config.trials as usize);
    for i in 0..config.trials {
        let (pair, lambda) = source.draw(i, &mut source_rng);
        let (mut a, mut b) = physics.draw(pair, lambda, &mut physics_rng);
        let ua: f64 = detection_rng.random();
        let ub: f64 = detection_rng.random();
        if ua >= config.efficiency_a {
            a = Outcome::Null;
        }
        if ub >= config.efficiency_b {
            b = Outcome::Null;
        }
        let heralded = herald_rng.random::<f64>() < config.heralding_probability;
        if let PhysicsState::Memory(strategy) = &mut physics {
            strategy.observe(&HistoryEntry {
                pair,
                outcome_a: a,
                outcome_b: b,
            });
        }
        records.push(TrialRecord {
            index: i,
            setting_a: pair.a,
            setting_b: pair.b,
            outcome_a: a,
            outcome_b: b,
            heralded,
            events: None,
        });
    }
    let log = TrialLog {
        records,
        source: config.setting_source.label().to_string(),
        predictable: config.setting_source.predictable(),
        locality_violating: config.physics.locality_violating(),
    };
    match &config.geometry {
        Some(g) => attach_geometry(log, g),
        None => Ok(log),
    }
}

/// Run `count` independent replications of `config` in parallel. Replication
/// `i` uses seed `split_seed(config.seed, i)`; output order follows `i`.
pub fn run_replications(config: &ExperimentConfig, count: u64) -> Result<Vec<TrialLog>> {
    config.validate()?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.seed = split_seed(config.seed, i);
            run(&c)
        })
        .collect()
}

/// Keep only heralded trials.
pub fn event_ready_filter(log: &TrialLog) -> TrialLog {
    TrialLog {
        records: log.records.iter().filter(|r| r.heralded).cloned().collect(),
        source: log.source.clone(),
        predictable: log.predictable,
        locality_violating: log.locality_violating,
    }
}
