//! Exact quantum predictions for polarization measurements on photon pairs.
//!
//! Outcome `+1` is transmission along the analyzer axis (`H̃`), `-1` is the
//! orthogonal channel (`Ṽ`). Both photons leave the source along opposite
//! directions of the z axis; the right-hand photon travels along `-z`, so a
//! polarizer set at lab angle `β` acts as a rotation by `-β` in that photon's
//! own right-handed frame. With this convention the state `(|HV⟩ + |VH⟩)/√2`
//! has `E(α, β) = -cos 2(α - β)`.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chsh::{signed_chsh, Outcome, SettingPair};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// Which member of the `|Ψ±⟩` pair to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellSign {
    Plus,
    Minus,
}

/// Two-photon polarization state with amplitudes ordered `HH, HV, VH, VV`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    amplitudes: [Complex64; 4],
}

impl PolarizationState {
    /// Wrap amplitudes that are already normalized.
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        let state = PolarizationState { amplitudes };
        state.check_normalized()?;
        Ok(state)
    }

    /// Rescale arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::domain("cannot normalize a zero or non-finite state"));
        }
        Ok(PolarizationState {
            amplitudes: amplitudes.map(|c| c / norm),
        })
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::domain(format!("state is not normalized (|ψ|² = {n})")));
        }
        Ok(())
    }
}

impl Serialize for PolarizationState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amplitudes.iter().map(|c| [c.re, c.im]).collect();
        #[derive(Serialize)]
        struct Repr {
            amplitudes: Vec<[f64; 2]>,
        }
        Repr { amplitudes: pairs }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PolarizationState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            amplitudes: [[f64; 2]; 4],
        }
        let repr = Repr::deserialize(deserializer)?;
        let amps = repr.amplitudes.map(|[re, im]| Complex64::new(re, im));
        PolarizationState::new(amps).map_err(serde::de::Error::custom)
    }
}

/// Polarizer orientation in the x–y plane, kept in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AnalyzerAngle(f64);

impl AnalyzerAngle {
    pub fn from_radians(angle: f64) -> Self {
        let mut r = angle.rem_euclid(PI);
        // rem_euclid can round up to exactly π for tiny negative inputs
        if r >= PI {
            r = 0.0;
        }
        AnalyzerAngle(r)
    }

    pub fn from_degrees(degrees: f64) -> Self {
        Self::from_radians(degrees.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

impl Serialize for AnalyzerAngle {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for AnalyzerAngle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let r = f64::deserialize(deserializer)?;
        if !r.is_finite() {
            return Err(serde::de::Error::custom("angle must be finite"));
        }
        Ok(AnalyzerAngle::from_radians(r))
    }
}

/// The four analyzer orientations `(a, a', b, b')` of a CHSH run, in radians.
///
/// Deserializes from `{a, a_prime, b, b_prime}` in radians or from
/// `{"degrees": [a, a', b, b']}`; always serializes in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "SettingsRepr")]
pub struct SettingsQuad {
    pub a: AnalyzerAngle,
    pub a_prime: AnalyzerAngle,
    pub b: AnalyzerAngle,
    pub b_prime: AnalyzerAngle,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SettingsRepr {
    Radians {
        a: AnalyzerAngle,
        a_prime: AnalyzerAngle,
        b: AnalyzerAngle,
        b_prime: AnalyzerAngle,
    },
    Degrees {
        degrees: [f64; 4],
    },
}

impl From<SettingsRepr> for SettingsQuad {
    fn from(r: SettingsRepr) -> Self {
        match r {
            SettingsRepr::Radians { a, a_prime, b, b_prime } => SettingsQuad { a, a_prime, b, b_prime },
            SettingsRepr::Degrees { degrees: [a, ap, b, bp] } => SettingsQuad::from_degrees(a, ap, b, bp),
        }
    }
}

impl SettingsQuad {
    pub fn from_degrees(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        SettingsQuad {
            a: AnalyzerAngle::from_degrees(a),
            a_prime: AnalyzerAngle::from_degrees(a_prime),
            b: AnalyzerAngle::from_degrees(b),
            b_prime: AnalyzerAngle::from_degrees(b_prime),
        }
    }

    /// Left and right analyzer angles for a joint setting choice.
    pub fn angles(&self, pair: SettingPair) -> (AnalyzerAngle, AnalyzerAngle) {
        let alpha = if pair.a == 0 { self.a } else { self.a_prime };
        let beta = if pair.b == 0 { self.b } else { self.b_prime };
        (alpha, beta)
    }
}

/// Outcome probabilities `p(A, B)` indexed `[A][B]` with `0 ↔ +1`, `1 ↔ -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDistribution(pub [[f64; 2]; 2]);

impl JointDistribution {
    pub fn prob(&self, a: Outcome, b: Outcome) -> f64 {
        match (a, b) {
            (Outcome::Null, _) | (_, Outcome::Null) => 0.0,
            _ => self.0[a.index()][b.index()],
        }
    }

    pub fn correlation(&self) -> f64 {
        let p = &self.0;
        p[0][0] + p[1][1] - p[0][1] - p[1][0]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().flatten().sum()
    }

    pub fn marginal_left_plus(&self) -> f64 {
        self.0[0][0] + self.0[0][1]
    }

    pub fn marginal_right_plus(&self) -> f64 {
        self.0[0][0] + self.0[1][0]
    }
}

/// `(|HV⟩ ± |VH⟩)/√2`.
pub fn make_bell_state(sign: BellSign) -> PolarizationState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = match sign {
        BellSign::Plus => h,
        BellSign::Minus => -h,
    };
    PolarizationState {
        amplitudes: [
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    }
}

/// `(|HV⟩ + r|VH⟩)/√(1 + r²)` for `0 < r ≤ 1`.
pub fn make_eberhard_state(r: f64) -> Result<PolarizationState> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::domain(format!("Eberhard parameter r must lie in (0, 1], got {r}")));
    }
    let n = (1.0 + r * r).sqrt();
    Ok(PolarizationState {
        amplitudes: [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0 / n, 0.0),
            Complex64::new(r / n, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    })
}

/// Single-photon basis `(H̃, Ṽ)` of a polarizer rotated by `phi`, written in
/// `(H, V)` components.
pub fn rotated_eigenstates(phi: AnalyzerAngle) -> ([f64; 2], [f64; 2]) {
    rotated_basis(phi.radians())
}

fn rotated_basis(phi: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = phi.sin_cos();
    ([c, s], [-s, c])
}

pub fn joint_distribution(
    state: &PolarizationState,
    alpha: AnalyzerAngle,
    beta: AnalyzerAngle,
) -> Result<JointDistribution> {
    state.check_normalized()?;
    let (lh, lv) = rotated_basis(alpha.radians());
    let (rh, rv) = rotated_basis(-beta.radians());
    let left = [lh, lv];
    let right = [rh, rv];
    let amps = state.amplitudes();
    let mut table = [[0.0; 2]; 2];
    for (i, l) in left.iter().enumerate() {
        for (j, r) in right.iter().enumerate() {
            // ⟨l ⊗ r|ψ⟩ with real basis vectors
            let overlap = amps[0] * (l[0] * r[0])
                + amps[1] * (l[0] * r[1])
                + amps[2] * (l[1] * r[0])
                + amps[3] * (l[1] * r[1]);
            table[i][j] = overlap.norm_sqr();
        }
    }
    Ok(JointDistribution(table))
}

/// `E(α, β) = Σ A·B·p(A, B)`.
pub fn correlation(state: &PolarizationState, alpha: AnalyzerAngle, beta: AnalyzerAngle) -> Result<f64> {
    Ok(joint_distribution(state, alpha, beta)?.correlation())
}

/// Correlations for the four joint settings of `quad`, in joint-setting order.
pub fn correlations(state: &PolarizationState, quad: &SettingsQuad) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for pair in SettingPair::ALL {
        let (alpha, beta) = quad.angles(pair);
        out[pair.index()] = correlation(state, alpha, beta)?;
    }
    Ok(out)
}

pub fn chsh_value(state: &PolarizationState, quad: &SettingsQuad) -> Result<f64> {
    Ok(signed_chsh(&correlations(state, quad)?).abs())
}

/// `(a, a', b, b') = (0°, 45°, 22.5°, 67.5°)`.
pub fn tsirelson_settings() -> SettingsQuad {
    SettingsQuad {
        a: AnalyzerAngle::from_radians(0.0),
        a_prime: AnalyzerAngle::from_radians(FRAC_PI_4),
        b: AnalyzerAngle::from_radians(FRAC_PI_8),
        b_prime: AnalyzerAngle::from_radians(3.0 * FRAC_PI_8),
    }
}
