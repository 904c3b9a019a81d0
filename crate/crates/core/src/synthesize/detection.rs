//! Local models that fake a CHSH violation by choosing when not to detect.

use crate::chsh::{NullConvention, Outcome, SettingPair, CHSH_SIGNS};
use crate::error::{Error, Result};
use crate::lhv::{enumerate_deterministic_strategies, model_chsh, Alphabet, DeterministicStrategy, HiddenVariableModel};

use super::lp::{lp_solve, LinearProgram, LpStatus};
use super::{AdversaryKind, AdversaryReport, RESIDUAL_TOL};

const WEIGHT_FLOOR: f64 = 1e-12;

fn detected(o: Outcome) -> f64 {
    if o.is_null() {
        0.0
    } else {
        1.0
    }
}

/// Per-side, per-setting detection indicators in the order
/// `(A, a), (A, a'), (B, b), (B, b')`.
fn detection_row(s: &DeterministicStrategy) -> [f64; 4] {
    [
        detected(s.left[0]),
        detected(s.left[1]),
        detected(s.right[0]),
        detected(s.right[1]),
    ]
}

fn double_detection(s: &DeterministicStrategy, pair: SettingPair) -> f64 {
    let (a, b) = s.outcomes(pair);
    detected(a) * detected(b)
}

fn signed_product_sum(s: &DeterministicStrategy, convention: NullConvention) -> f64 {
    SettingPair::ALL
        .iter()
        .map(|&p| {
            let (a, b) = s.outcomes(p);
            convention
                .apply(a, b)
                .map_or(0.0, |(x, y)| CHSH_SIGNS[p.index()] * (x * y) as f64)
        })
        .sum()
}

/// Largest `S` a local model can show with independent-looking detectors of
/// efficiency `eta`.
///
/// The model is a mixture of the 81 deterministic strategies over
/// `{+1, -1, 0}`. Each detector fires with probability exactly `eta` at both of
/// its settings and both fire together with probability `eta²` at every joint
/// setting, so the run fractions match independent detectors: `η²` doubles,
/// `2η(1-η)` singles, `(1-η)²` with no detection. The objective is the
/// renormalized score over runs with at least one detection; under these
/// constraints it is proportional to `S` on coincidences, which is what the
/// report carries for [`NullConvention::DiscardNulls`]. With
/// [`NullConvention::NullAsMinus`] every run counts and a null is scored as -1.
pub fn max_chsh_given_efficiency(eta: f64, convention: NullConvention) -> Result<AdversaryReport> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain(format!("efficiency must lie in (0, 1], got {eta}")));
    }
    let strategies = enumerate_deterministic_strategies(Alphabet::Ternary);
    let k = strategies.len();
    let det: Vec<[f64; 4]> = strategies.iter().map(detection_row).collect();
    let score: Vec<f64> = strategies.iter().map(|s| signed_product_sum(s, convention)).collect();

    let mut lp = LinearProgram::new(score);
    lp.add_equality(vec![1.0; k], 1.0);
    for c in 0..4 {
        lp.add_equality(det.iter().map(|d| d[c]).collect(), eta);
    }
    for pair in SettingPair::ALL {
        lp.add_equality(strategies.iter().map(|s| double_detection(s, pair)).collect(), eta * eta);
    }
    let sol = lp_solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible(format!("detection LP status {:?}", sol.status)));
    }
    let (weights, iterations) = (sol.x, sol.iterations);

    let mut kept = Vec::new();
    let mut kept_weights = Vec::new();
    for (s, w) in strategies.iter().zip(&weights) {
        if *w > WEIGHT_FLOOR {
            kept.push(*s);
            kept_weights.push(*w);
        }
    }
    let total: f64 = kept_weights.iter().sum();
    for w in kept_weights.iter_mut() {
        *w /= total;
    }

    let mut residuals = vec![kept_weights.iter().sum::<f64>() - 1.0];
    for c in 0..4 {
        let rate: f64 = kept.iter().zip(&kept_weights).map(|(s, w)| w * detection_row(s)[c]).sum();
        residuals.push(rate - eta);
    }
    let doubles: Vec<f64> = SettingPair::ALL
        .iter()
        .map(|&p| kept.iter().zip(&kept_weights).map(|(s, w)| w * double_detection(s, p)).sum())
        .collect();
    for d in &doubles {
        residuals.push(d - eta * eta);
    }

    let numerator: f64 = kept
        .iter()
        .zip(&kept_weights)
        .map(|(s, w)| w * signed_product_sum(s, NullConvention::DiscardNulls))
        .sum();
    // single detections enter with zero product; runs with no detection are dropped
    let renormalized = numerator / (2.0 * eta - eta * eta);

    let model = HiddenVariableModel::from_strategies(&kept, kept_weights)?;
    let achieved = model_chsh(&model, Some(convention))?;
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(AdversaryReport {
        kind: AdversaryKind::Detection,
        status: if max_residual <= RESIDUAL_TOL { "optimal" } else { "residual_exceeded" }.to_string(),
        model,
        achieved_s: achieved,
        achieved_i: None,
        renormalized_s: Some(renormalized),
        efficiency: Some(eta),
        convention,
        targets: None,
        residuals,
        max_residual,
        tolerance: RESIDUAL_TOL,
        iterations,
        restarts: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Best coincidence `S` by enumerating every vertex of the same polytope,
    /// after collapsing strategies with identical detection patterns (within a
    /// pattern only the best score can be optimal).
    fn vertex_oracle(eta: f64) -> f64 {
        let strategies = enumerate_deterministic_strategies(Alphabet::Ternary);
        let mut best_t = [f64::NEG_INFINITY; 16];
        let mut pattern_of = [[0.0; 4]; 16];
        for s in &strategies {
            let d = detection_row(s);
            let idx = d.iter().enumerate().map(|(i, v)| (*v as usize) << i).sum::<usize>();
            pattern_of[idx] = d;
            best_t[idx] = best_t[idx].max(signed_product_sum(s, NullConvention::DiscardNulls));
        }
        let column = |c: usize| -> [f64; 9] {
            let d = pattern_of[c];
            [1.0, d[0], d[1], d[2], d[3], d[0] * d[2], d[0] * d[3], d[1] * d[2], d[1] * d[3]]
        };
        let e2 = eta * eta;
        let rhs = [1.0, eta, eta, eta, eta, e2, e2, e2, e2];
        let mut best = f64::NEG_INFINITY;
        for mask in 1u32..(1 << 16) {
            let cols: Vec<usize> = (0..16).filter(|c| mask & (1 << c) != 0).collect();
            if cols.len() > 9 {
                continue;
            }
            let Some(w) = solve_unique(&cols.iter().map(|&c| column(c)).collect::<Vec<_>>(), &rhs) else {
                continue;
            };
            if w.iter().any(|v| *v < -1e-12) {
                continue;
            }
            let num: f64 = cols.iter().zip(&w).map(|(&c, v)| v * best_t[c]).sum();
            best = best.max(num / e2);
        }
        best
    }

    /// Unique solution of an overdetermined consistent system, by normal
    /// equations with full column rank, or `None`.
    fn solve_unique(cols: &[[f64; 9]], rhs: &[f64; 9]) -> Option<Vec<f64>> {
        let k = cols.len();
        let mut m = vec![vec![0.0; k + 1]; k];
        for i in 0..k {
            for j in 0..k {
                m[i][j] = (0..9).map(|r| cols[i][r] * cols[j][r]).sum();
            }
            m[i][k] = (0..9).map(|r| cols[i][r] * rhs[r]).sum();
        }
        for c in 0..k {
            let p = (c..k).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
            if m[p][c].abs() < 1e-10 {
                return None;
            }
            m.swap(c, p);
            for r in 0..k {
                if r != c {
                    let f = m[r][c] / m[c][c];
                    for j in c..=k {
                        m[r][j] -= f * m[c][j];
                    }
                }
            }
        }
        let w: Vec<f64> = (0..k).map(|i| m[i][k] / m[i][i]).collect();
        let residual = (0..9)
            .map(|r| ((0..k).map(|i| cols[i][r] * w[i]).sum::<f64>() - rhs[r]).abs())
            .fold(0.0, f64::max);
        (residual < 1e-9).then_some(w)
    }

    #[test]
    fn perfect_detection_gives_local_bound() {
        let r = max_chsh_given_efficiency(1.0, NullConvention::DiscardNulls).unwrap();
        assert_abs_diff_eq!(r.achieved_s, 2.0, epsilon = 1e-9);
        assert!(r.max_residual < 1e-9);
        assert!(!r.model.lambda_support().is_empty());
    }

    #[test]
    fn critical_efficiency_reaches_tsirelson() {
        let r = max_chsh_given_efficiency(0.828, NullConvention::DiscardNulls).unwrap();
        assert!(r.achieved_s >= 2.0 * std::f64::consts::SQRT_2 - 1e-6, "{}", r.achieved_s);
        assert_eq!(r.status, "optimal");
    }

    #[test]
    fn agrees_with_vertex_enumeration() {
        for eta in [0.6, 0.7, 0.828, 0.9, 1.0] {
            let lp = max_chsh_given_efficiency(eta, NullConvention::DiscardNulls).unwrap();
            let oracle = vertex_oracle(eta);
            assert!((lp.achieved_s - oracle).abs() < 1e-8, "eta {eta}: lp {} oracle {oracle}", lp.achieved_s);
        }
    }

    #[test]
    fn frozen_oracle_values() {
        // enumeration results: 4/η - 2 above η = 2/3, capped at 4 below
        for (eta, s) in [(0.6, 4.0), (0.7, 3.7142857142857144), (0.828, 2.8309178743961354), (0.9, 2.4444444444444446), (1.0, 2.0)] {
            let r = max_chsh_given_efficiency(eta, NullConvention::DiscardNulls).unwrap();
            assert_abs_diff_eq!(r.achieved_s, s, epsilon = 1e-8);
        }
    }

    #[test]
    fn monotone_and_bounded() {
        let mut last = f64::INFINITY;
        for i in 0..=20 {
            let eta = 0.5 + 0.025 * i as f64;
            let s = max_chsh_given_efficiency(eta, NullConvention::DiscardNulls).unwrap().achieved_s;
            assert!(s <= last + 1e-9);
            assert!(s <= 4.0 / eta - 2.0 + 1e-8);
            last = s;
        }
    }

    #[test]
    fn null_as_minus_stays_local() {
        for eta in [0.5, 0.8, 1.0] {
            let r = max_chsh_given_efficiency(eta, NullConvention::NullAsMinus).unwrap();
            assert!(r.achieved_s <= 2.0 + 1e-9);
        }
    }

    #[test]
    fn rejects_bad_efficiency() {
        assert!(matches!(max_chsh_given_efficiency(0.0, NullConvention::DiscardNulls), Err(Error::Domain(_))));
        assert!(max_chsh_given_efficiency(1.1, NullConvention::DiscardNulls).is_err());
    }
}
