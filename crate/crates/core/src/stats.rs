//! Estimators and significance tests for trial logs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::chsh::{
    NullConvention, Outcome, SettingPair, BELL_PLUS_TARGETS, CHSH_SIGNS, CLASSICAL_WIN_PROBABILITY, LOCAL_BOUND,
    TSIRELSON_BOUND,
};
use crate::engine::TrialLog;
use crate::error::{Error, Result};

/// Smallest reported p-value; anything below is clamped and flagged.
pub const P_FLOOR: f64 = 1e-323;

/// Counts `N^{AB}` indexed by outcome index (`+1`, `-1`, `0`).
pub type CountTable = [[u64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueWithError {
    pub value: f64,
    pub std_error: f64,
}

pub fn pair_counts(log: &TrialLog, pair: SettingPair) -> CountTable {
    let mut counts = [[0u64; 3]; 3];
    for r in log.records.iter().filter(|r| r.pair() == pair) {
        counts[r.outcome_a.index()][r.outcome_b.index()] += 1;
    }
    counts
}

fn all_pair_counts(log: &TrialLog) -> [CountTable; 4] {
    let mut counts = [[[0u64; 3]; 3]; 4];
    for r in &log.records {
        counts[r.pair().index()][r.outcome_a.index()][r.outcome_b.index()] += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub pair: SettingPair,
    pub value: f64,
    pub std_error: f64,
    /// Trials that entered the average.
    pub used: u64,
    pub counts: CountTable,
    pub convention: NullConvention,
}

/// `E = Σ A·B·N^{AB} / N` over the runs kept by `convention`, with
/// `se = √((1 - E²)/N)`.
pub fn correlation_from_counts(
    pair: SettingPair,
    counts: &CountTable,
    convention: NullConvention,
) -> Result<CorrelationEstimate> {
    let mut sum = 0i64;
    let mut used = 0u64;
    for a in Outcome::ALL {
        for b in Outcome::ALL {
            let n = counts[a.index()][b.index()];
            if let Some((x, y)) = convention.apply(a, b) {
                sum += (x * y) as i64 * n as i64;
                used += n;
            }
        }
    }
    if used == 0 {
        return Err(Error::insufficient(format!(
            "no usable trials at {pair} under {}",
            convention.name()
        )));
    }
    let value = sum as f64 / used as f64;
    Ok(CorrelationEstimate {
        pair,
        value,
        std_error: ((1.0 - value * value).max(0.0) / used as f64).sqrt(),
        used,
        counts: *counts,
        convention,
    })
}

pub fn estimate_correlation(log: &TrialLog, pair: SettingPair, convention: NullConvention) -> Result<CorrelationEstimate> {
    correlation_from_counts(pair, &pair_counts(log, pair), convention)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    #[serde(rename = "S")]
    pub s: f64,
    pub std_error: f64,
    pub correlations: [CorrelationEstimate; 4],
    pub convention: NullConvention,
}

/// `S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|` with the four standard
/// errors added in quadrature.
pub fn estimate_s(log: &TrialLog, convention: NullConvention) -> Result<ChshEstimate> {
    let counts = all_pair_counts(log);
    let mut correlations = Vec::with_capacity(4);
    for pair in SettingPair::ALL {
        correlations.push(correlation_from_counts(pair, &counts[pair.index()], convention)?);
    }
    let correlations: [CorrelationEstimate; 4] = correlations.try_into().expect("four pairs");
    let signed: f64 = correlations.iter().zip(CHSH_SIGNS).map(|(c, s)| s * c.value).sum();
    let std_error = correlations.iter().map(|c| c.std_error.powi(2)).sum::<f64>().sqrt();
    Ok(ChshEstimate {
        s: signed.abs(),
        std_error,
        correlations,
        convention,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenormalizedCorrelation {
    pub pair: SettingPair,
    /// Coincidence correlation `E`.
    pub e: f64,
    pub e_std_error: f64,
    /// `E' = Σ A·B·N^{AB} / (N_double + N_single)`.
    pub e_prime: f64,
    pub double: u64,
    pub single: u64,
    /// `E'/E`, which equals `N_double / (N_double + N_single)`.
    pub ratio: f64,
    /// Binomial standard error of `ratio`.
    pub ratio_std_error: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expected_ratio: Option<f64>,
    /// `|ratio - η/(2-η)| ≤ 4·se`, when `η` is known.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub consistent: Option<bool>,
}

/// Efficiency-renormalized correlation at one setting pair. Runs with no
/// detection on either side are ignored. With `eta` the ratio is compared to
/// `η/(2-η)`.
pub fn renormalized_correlation(log: &TrialLog, pair: SettingPair, eta: Option<f64>) -> Result<RenormalizedCorrelation> {
    if let Some(eta) = eta {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::domain(format!("efficiency must lie in (0, 1], got {eta}")));
        }
    }
    let counts = pair_counts(log, pair);
    let e = correlation_from_counts(pair, &counts, NullConvention::DiscardNulls)?;
    let double = e.used;
    let null = Outcome::Null.index();
    let single: u64 = (0..2).map(|i| counts[i][null] + counts[null][i]).sum();
    let total = (double + single) as f64;
    let ratio = double as f64 / total;
    let ratio_std_error = (ratio * (1.0 - ratio) / total).sqrt();
    let expected_ratio = eta.map(|eta| eta / (2.0 - eta));
    Ok(RenormalizedCorrelation {
        pair,
        e: e.value,
        e_std_error: e.std_error,
        e_prime: e.value * ratio,
        double,
        single,
        ratio,
        ratio_std_error,
        expected_ratio,
        consistent: expected_ratio.map(|x| (ratio - x).abs() <= 4.0 * ratio_std_error.max(f64::MIN_POSITIVE)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBound {
    pub eta: f64,
    /// Local-realist ceiling on coincidence `S`, `4/η - 2`.
    pub bound: f64,
    /// `2(√2 - 1)`, below which the ceiling reaches `2√2`.
    pub critical_efficiency: f64,
    /// True when local models can match the quantum maximum.
    pub loophole_open: bool,
}

pub fn efficiency_bound(eta: f64) -> Result<EfficiencyBound> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain(format!("efficiency must lie in (0, 1], got {eta}")));
    }
    let bound = 4.0 / eta - 2.0;
    Ok(EfficiencyBound {
        eta,
        bound,
        critical_efficiency: 2.0 * (std::f64::consts::SQRT_2 - 1.0),
        loophole_open: bound >= TSIRELSON_BOUND - 1e-12,
    })
}

/// `S = |4Δ + 2|`, `se_S = 4·se_Δ`.
pub fn freedman_delta_to_s(delta: f64, delta_std_error: f64) -> ValueWithError {
    ValueWithError {
        value: (4.0 * delta + 2.0).abs(),
        std_error: 4.0 * delta_std_error,
    }
}

/// `Δ = 3R(φ)/R₀ - R(3φ)/R₀ - 1` from a log taken at the schedule
/// `θ_ab = θ_a'b = θ_a'b' = φ`, `θ_ab' = 3φ`, with `R/R₀` estimated by the
/// `(+,+)` fraction among coincidences. The three `φ` pairs are pooled.
pub fn freedman_delta(log: &TrialLog) -> Result<ValueWithError> {
    let counts = all_pair_counts(log);
    let plus = Outcome::Plus.index();
    let rate = |pairs: &[usize]| -> Result<(f64, f64)> {
        let mut pp = 0u64;
        let mut n = 0u64;
        for &k in pairs {
            pp += counts[k][plus][plus];
            n += (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| counts[k][i][j]).sum::<u64>();
        }
        if n == 0 {
            return Err(Error::insufficient("no coincidences at a required setting pair"));
        }
        let r = pp as f64 / n as f64;
        Ok((r, r * (1.0 - r) / n as f64))
    };
    let (r1, v1) = rate(&[0, 2, 3])?;
    let (r3, v3) = rate(&[1])?;
    Ok(ValueWithError {
        value: 3.0 * r1 - r3 - 1.0,
        std_error: (9.0 * v1 + v3).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoltPipkin {
    /// `|R(φ) - R(3φ)| / R₀`.
    pub value: f64,
    pub lhv_bound: f64,
    pub qm_prediction: f64,
}

pub fn holt_pipkin_statistic(r_phi: f64, r_3phi: f64, r_0: f64) -> Result<HoltPipkin> {
    if !(r_0 > 0.0) {
        return Err(Error::domain(format!("R0 must be positive, got {r_0}")));
    }
    Ok(HoltPipkin {
        value: (r_phi - r_3phi).abs() / r_0,
        lhv_bound: 0.25,
        qm_prediction: std::f64::consts::SQRT_2 / 4.0,
    })
}

/// Standard deviations by which a measured statistic exceeds the 1/4 bound.
pub fn holt_pipkin_sigma(value: f64, std_error: f64) -> Result<f64> {
    if !(std_error > 0.0) {
        return Err(Error::domain(format!("standard error must be positive, got {std_error}")));
    }
    Ok((value - 0.25) / std_error)
}

/// `(S - 2)/se`.
pub fn gaussian_significance(s: f64, std_error: f64) -> Result<f64> {
    if !(std_error > 0.0) {
        return Err(Error::domain(format!("standard error must be positive, got {std_error}")));
    }
    Ok((s - LOCAL_BOUND) / std_error)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Upper-tail probability `P(Z ≥ z)`.
pub fn normal_upper_tail(z: f64) -> f64 {
    standard_normal().cdf(-z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEquivalent {
    /// `z` with `P(Z ≥ z) = p`.
    pub one_sided: f64,
    /// `z` with `P(|Z| ≥ z) = p`.
    pub two_sided: f64,
}

pub fn p_to_sigma(p: f64) -> Result<SigmaEquivalent> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("p-value must lie in (0, 1], got {p}")));
    }
    let n = standard_normal();
    Ok(SigmaEquivalent {
        one_sided: -n.inverse_cdf(p),
        two_sided: -n.inverse_cdf(p / 2.0),
    })
}

/// Per-pair product `A·B` counted as a win.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinRule {
    pub targets: [i8; 4],
}

impl WinRule {
    /// Win on `A·B = -1` at `(a,b)`, `(a',b)`, `(a',b')` and `+1` at `(a,b')`.
    pub fn bell_plus() -> Self {
        WinRule {
            targets: BELL_PLUS_TARGETS,
        }
    }

    /// A CHSH-type rule has an odd number of `-1` targets, which caps local
    /// strategies at 3 wins out of 4.
    pub fn new(targets: [i8; 4]) -> Result<Self> {
        if targets.iter().any(|t| t.abs() != 1) {
            return Err(Error::usage("win targets must be +1 or -1"));
        }
        if targets.iter().map(|t| *t as i32).product::<i32>() != -1 {
            return Err(Error::usage(
                "win targets must have an odd number of -1 entries for the 3/4 classical bound to hold",
            ));
        }
        Ok(WinRule { targets })
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = SettingPair::ALL
            .iter()
            .map(|p| format!("{p}: AB={:+}", self.targets[p.index()]))
            .collect();
        format!("win iff {}", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    /// Win fraction above 3/4 in binomial standard errors.
    pub gaussian_sigma: f64,
    /// Gaussian upper-tail p for the same win count.
    pub gaussian_p: f64,
    /// `exp(-2N·max(0, k/N - 3/4)²)`, clamped at [`P_FLOOR`].
    pub martingale_p: f64,
    pub underflow: bool,
    pub trials_used: u64,
    pub wins: u64,
    pub win_fraction: f64,
    pub win_rule: String,
    pub convention: NullConvention,
}

/// Azuma–Hoeffding p-value for the CHSH game.
///
/// Against any local model, even one that adapts to the full history, each
/// trial is won with conditional probability at most 3/4 when settings are
/// uniform and fresh. The centred win count is then a supermartingale with
/// bounded increments, giving `P(k ≥ N(3/4 + t)) ≤ exp(-2Nt²)`.
pub fn martingale_pvalue(log: &TrialLog, rule: &WinRule, convention: NullConvention) -> Result<SignificanceReport> {
    WinRule::new(rule.targets)?;
    let mut wins = 0u64;
    let mut used = 0u64;
    for r in &log.records {
        if let Some((a, b)) = convention.apply(r.outcome_a, r.outcome_b) {
            used += 1;
            if a * b == rule.targets[r.pair().index()] {
                wins += 1;
            }
        }
    }
    if used == 0 {
        return Err(Error::insufficient("no usable trials for the martingale test"));
    }
    let n = used as f64;
    let fraction = wins as f64 / n;
    let excess = (fraction - CLASSICAL_WIN_PROBABILITY).max(0.0);
    let raw = (-2.0 * n * excess * excess).exp();
    let underflow = raw < P_FLOOR;
    let sd = (CLASSICAL_WIN_PROBABILITY * (1.0 - CLASSICAL_WIN_PROBABILITY) / n).sqrt();
    let z = (fraction - CLASSICAL_WIN_PROBABILITY) / sd;
    Ok(SignificanceReport {
        gaussian_sigma: z,
        gaussian_p: normal_upper_tail(z),
        martingale_p: raw.max(P_FLOOR),
        underflow,
        trials_used: used,
        wins,
        win_fraction: fraction,
        win_rule: rule.describe(),
        convention,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingBalance {
    pub counts: [u64; 4],
    pub frequencies: [f64; 4],
    /// `max |f_ab - 1/4|`.
    pub epsilon: f64,
    /// Carried over from the log's source label.
    pub predictable: bool,
}

pub fn setting_balance(log: &TrialLog) -> Result<SettingBalance> {
    if log.is_empty() {
        return Err(Error::insufficient("empty trial log"));
    }
    let mut counts = [0u64; 4];
    for r in &log.records {
        counts[r.pair().index()] += 1;
    }
    let n = log.len() as f64;
    let frequencies = counts.map(|c| c as f64 / n);
    Ok(SettingBalance {
        counts,
        frequencies,
        epsilon: frequencies.iter().fold(0.0f64, |m, f| m.max((f - 0.25).abs())),
        predictable: log.predictable,
    })
}
