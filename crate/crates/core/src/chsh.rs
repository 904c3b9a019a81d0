//! Shared indexing for the two-setting, two-outcome CHSH scenario.
//!
//! Setting indices are 0 (unprimed) and 1 (primed) on each side. Joint setting
//! pairs are stored in the order `(a,b)`, `(a,b')`, `(a',b)`, `(a',b')`, i.e.
//! `index = 2 * a + b`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient of each joint-setting correlation in
/// `S = |E(a,b) + E(a',b) - E(a,b') + E(a',b')|`.
pub const CHSH_SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

/// Local-realist ceiling on `S` with perfect detection.
pub const LOCAL_BOUND: f64 = 2.0;

/// Quantum ceiling on `S`, `2√2`.
pub const TSIRELSON_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

/// A joint setting choice `(a, b)` with each index in `{0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SettingPair {
    pub a: u8,
    pub b: u8,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair { a: 0, b: 0 },
        SettingPair { a: 0, b: 1 },
        SettingPair { a: 1, b: 0 },
        SettingPair { a: 1, b: 1 },
    ];

    pub fn new(a: u8, b: u8) -> Result<Self> {
        if a > 1 || b > 1 {
            return Err(Error::domain(format!("setting indices must be 0 or 1, got ({a}, {b})")));
        }
        Ok(SettingPair { a, b })
    }

    pub fn index(self) -> usize {
        2 * self.a as usize + self.b as usize
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }

    pub fn chsh_sign(self) -> f64 {
        CHSH_SIGNS[self.index()]
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = if self.a == 0 { "a" } else { "a'" };
        let b = if self.b == 0 { "b" } else { "b'" };
        write!(f, "({a},{b})")
    }
}

/// A single-side measurement result. `Null` marks a run with no registered
/// detection on that side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Outcome {
    Plus,
    Minus,
    Null,
}

impl Outcome {
    /// `+1`, `-1`, then `0`; the order used by every outcome-indexed table.
    pub const ALL: [Outcome; 3] = [Outcome::Plus, Outcome::Minus, Outcome::Null];
    pub const BINARY: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
            Outcome::Null => 0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
            Outcome::Null => 2,
        }
    }

    pub fn is_null(self) -> bool {
        self == Outcome::Null
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
            Outcome::Null => Outcome::Null,
        }
    }
}

impl TryFrom<i8> for Outcome {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            0 => Ok(Outcome::Null),
            other => Err(Error::domain(format!("outcome must be +1, -1 or 0, got {other}"))),
        }
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value()
    }
}

/// Per-pair product `A·B` that counts as a win in the CHSH game, matched to
/// the sign pattern of `|Ψ+⟩` at the Tsirelson settings.
pub const BELL_PLUS_TARGETS: [i8; 4] = [-1, 1, -1, -1];

/// Best classical winning probability of a CHSH-type game.
pub const CLASSICAL_WIN_PROBABILITY: f64 = 0.75;

/// How a null outcome enters a correlation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullConvention {
    /// Keep only runs where both sides registered `±1`.
    #[serde(alias = "discard")]
    DiscardNulls,
    /// Single-channel practice: a missing detection is recorded as `-1`.
    #[serde(alias = "minus")]
    NullAsMinus,
}

impl NullConvention {
    pub fn name(self) -> &'static str {
        match self {
            NullConvention::DiscardNulls => "discard_nulls",
            NullConvention::NullAsMinus => "null_as_minus",
        }
    }

    /// Map an outcome pair into the `±1` pair used for the product, or `None`
    /// when the run is dropped.
    pub fn apply(self, a: Outcome, b: Outcome) -> Option<(i8, i8)> {
        match self {
            NullConvention::DiscardNulls => {
                if a.is_null() || b.is_null() {
                    None
                } else {
                    Some((a.value(), b.value()))
                }
            }
            NullConvention::NullAsMinus => {
                let m = |o: Outcome| if o.is_null() { -1 } else { o.value() };
                Some((m(a), m(b)))
            }
        }
    }
}

impl std::str::FromStr for NullConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discard" | "discard_nulls" => Ok(NullConvention::DiscardNulls),
            "minus" | "null_as_minus" => Ok(NullConvention::NullAsMinus),
            other => Err(Error::usage(format!("unknown null convention '{other}' (use discard or minus)"))),
        }
    }
}

/// Combine four correlations (in joint-setting order) into `S` without the
/// absolute value.
pub fn signed_chsh(correlations: &[f64; 4]) -> f64 {
    correlations
        .iter()
        .zip(CHSH_SIGNS)
        .map(|(e, s)| s * e)
        .sum()
}
