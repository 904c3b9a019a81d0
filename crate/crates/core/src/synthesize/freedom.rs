//! Setting-dependent local models with the least mutual information between
//! the hidden state and the joint setting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chsh::{NullConvention, SettingPair};
use crate::error::{Error, Result};
use crate::lhv::{
    enumerate_deterministic_strategies, model_chsh, model_correlations, mutual_information_of, Alphabet,
    DeterministicStrategy, HiddenVariableModel,
};

use super::lp::{lp_solve, LinearProgram, LpStatus};
use super::{AdversaryKind, AdversaryReport, RESIDUAL_TOL};

/// Settings for the multi-start descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop a restart once one step improves `I` by less than this (bits).
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for MiOptions {
    fn default() -> Self {
        MiOptions {
            restarts: 32,
            max_iterations: 20_000,
            tolerance: 1e-13,
            seed: 0x5eed_f0c5,
        }
    }
}

struct Problem {
    /// `A·B` of each strategy at each joint setting.
    sign: [Vec<f64>; 4],
    /// Probability mass of the `+1` and `-1` blocks at each joint setting.
    mass: [[f64; 2]; 4],
    p: [f64; 4],
    n: usize,
}

impl Problem {
    fn block(&self, k: usize, l: usize) -> usize {
        if self.sign[k][l] > 0.0 {
            0
        } else {
            1
        }
    }

    fn marginal(&self, q: &[Vec<f64>; 4]) -> Vec<f64> {
        (0..self.n).map(|l| (0..4).map(|k| self.p[k] * q[k][l]).sum()).collect()
    }

    fn objective(&self, q: &[Vec<f64>; 4]) -> f64 {
        let rows: [&[f64]; 4] = [&q[0], &q[1], &q[2], &q[3]];
        mutual_information_of(&rows, &self.p)
    }

    /// Rescale each sign block of `row` to its required mass; an all-zero
    /// block falls back to uniform.
    fn project(&self, k: usize, row: &mut [f64]) {
        for blk in 0..2 {
            let target = self.mass[k][blk];
            let idx: Vec<usize> = (0..self.n).filter(|&l| self.block(k, l) == blk).collect();
            let total: f64 = idx.iter().map(|&l| row[l]).sum();
            for &l in &idx {
                row[l] = if target == 0.0 {
                    0.0
                } else if total > 0.0 {
                    row[l] * target / total
                } else {
                    target / idx.len() as f64
                };
            }
        }
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> [Vec<f64>; 4] {
        std::array::from_fn(|k| {
            let mut row: Vec<f64> = (0..self.n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            self.project(k, &mut row);
            row
        })
    }

    /// Exponentiated-gradient step of relative size `tau` per block:
    /// `q ← q^(1-τ) · p̄^τ`, then renormalized on each sign block. At `τ = 1`
    /// this is the exact minimizer of `I` for the current marginal.
    fn step(&self, q: &[Vec<f64>; 4], tau: f64) -> [Vec<f64>; 4] {
        let pbar = self.marginal(q);
        std::array::from_fn(|k| {
            let mut row: Vec<f64> = (0..self.n)
                .map(|l| {
                    if q[k][l] == 0.0 && tau < 1.0 {
                        0.0
                    } else {
                        q[k][l].powf(1.0 - tau) * pbar[l].powf(tau)
                    }
                })
                .collect();
            self.project(k, &mut row);
            row
        })
    }

    fn descend(&self, mut q: [Vec<f64>; 4], opts: &MiOptions) -> ([Vec<f64>; 4], f64, usize) {
        let mut value = self.objective(&q);
        let mut iterations = 0;
        while iterations < opts.max_iterations {
            iterations += 1;
            // backtrack on τ until the step does not increase I
            let mut tau = 1.0;
            let mut accepted = None;
            while tau > 1e-6 {
                let trial = self.step(&q, tau);
                let v = self.objective(&trial);
                if v <= value {
                    accepted = Some((trial, v));
                    break;
                }
                tau *= 0.5;
            }
            let Some((next, v)) = accepted else { break };
            let gain = value - v;
            q = next;
            value = v;
            if gain < opts.tolerance {
                break;
            }
        }
        (q, value, iterations)
    }
}

fn local_mixture(strategies: &[DeterministicStrategy], targets: &[f64; 4]) -> Result<Option<Vec<f64>>> {
    let n = strategies.len();
    let mut lp = LinearProgram::new(vec![0.0; n]);
    lp.add_equality(vec![1.0; n], 1.0);
    for pair in SettingPair::ALL {
        let row = strategies
            .iter()
            .map(|s| {
                let (a, b) = s.outcomes(pair);
                (a.value() * b.value()) as f64
            })
            .collect();
        lp.add_equality(row, targets[pair.index()]);
    }
    let sol = lp_solve(&lp)?;
    Ok((sol.status == LpStatus::Optimal).then(|| sol.x.iter().map(|w| w.max(0.0)).collect()))
}

/// Find `p(λ|a,b)` over the 16 deterministic `±1` strategies that reproduces
/// `targets` while keeping `I(λ; a,b)` small.
///
/// Targets inside the local polytope are matched by an unconditional mixture
/// with `I = 0`. Otherwise the run uses `opts.restarts` independent random
/// starts in parallel and keeps the best (lowest `I`, then lowest restart
/// index).
pub fn min_mutual_information(
    targets: &[f64; 4],
    setting_distribution: &[f64; 4],
    opts: &MiOptions,
) -> Result<AdversaryReport> {
    if targets.iter().any(|e| !e.is_finite() || e.abs() > 1.0 + 1e-12) {
        return Err(Error::Infeasible(format!("target correlations {targets:?} are outside [-1, 1]")));
    }
    if setting_distribution.iter().any(|p| !(*p >= 0.0)) || (setting_distribution.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::domain("setting distribution must be a probability vector"));
    }
    if opts.restarts == 0 {
        return Err(Error::usage("at least one restart is required"));
    }
    let targets = targets.map(|e| e.clamp(-1.0, 1.0));
    let strategies = enumerate_deterministic_strategies(Alphabet::Binary);

    if let Some(weights) = local_mixture(&strategies, &targets)? {
        let total: f64 = weights.iter().sum();
        let rows = std::array::from_fn(|_| weights.iter().map(|w| w / total).collect());
        return finish(&strategies, rows, &targets, setting_distribution, 0, 0);
    }

    let problem = Problem {
        sign: std::array::from_fn(|k| {
            let pair = SettingPair::from_index(k);
            strategies
                .iter()
                .map(|s| {
                    let (a, b) = s.outcomes(pair);
                    (a.value() * b.value()) as f64
                })
                .collect()
        }),
        mass: targets.map(|e| [(1.0 + e) / 2.0, (1.0 - e) / 2.0]),
        p: *setting_distribution,
        n: strategies.len(),
    };
    let runs: Vec<(usize, [Vec<f64>; 4], f64, usize)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64);
            let start = problem.random_start(&mut rng);
            let (q, v, it) = problem.descend(start, opts);
            (r, q, v, it)
        })
        .collect();
    let total_iterations = runs.iter().map(|r| r.3).sum();
    let best = runs
        .into_iter()
        .min_by(|x, y| x.2.total_cmp(&y.2).then(x.0.cmp(&y.0)))
        .expect("at least one restart");
    finish(&strategies, best.1, &targets, setting_distribution, total_iterations, opts.restarts)
}

fn finish(
    strategies: &[DeterministicStrategy],
    rows: [Vec<f64>; 4],
    targets: &[f64; 4],
    setting_distribution: &[f64; 4],
    iterations: usize,
    restarts: usize,
) -> Result<AdversaryReport> {
    let model = HiddenVariableModel::from_conditional_strategies(strategies, rows)?;
    let achieved = model_correlations(&model, None)?;
    let mut residuals: Vec<f64> = achieved.iter().zip(targets).map(|(a, t)| a - t).collect();
    for pair in SettingPair::ALL {
        residuals.push(model.prior_given(pair).iter().sum::<f64>() - 1.0);
    }
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let info = crate::lhv::mutual_information(&model, setting_distribution)?;
    Ok(AdversaryReport {
        kind: AdversaryKind::FreedomOfChoice,
        status: if max_residual <= RESIDUAL_TOL { "optimal" } else { "residual_exceeded" }.to_string(),
        achieved_s: model_chsh(&model, None)?,
        achieved_i: Some(info),
        renormalized_s: None,
        efficiency: None,
        convention: NullConvention::DiscardNulls,
        targets: Some(*targets),
        model,
        residuals,
        max_residual,
        tolerance: RESIDUAL_TOL,
        iterations,
        restarts: Some(restarts),
    })
}
