//! Finite local hidden-variable models.
//!
//! A model is a finite set of hidden states `λ`, a prior over them (either a
//! fixed `p(λ)` or a setting-dependent `p(λ|a,b)`), and per-side response
//! tables `p(A|a,λ)` and `p(B|b,λ)`. The response tables are indexed only by
//! the local setting and `λ`, so a model cannot express signalling between the
//! stations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chsh::{signed_chsh, NullConvention, Outcome, SettingPair, BELL_PLUS_TARGETS};
use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-12;

/// Outcome alphabet of a model's responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alphabet {
    /// `{+1, -1}`
    Binary,
    /// `{+1, -1, 0}`
    Ternary,
}

impl Alphabet {
    pub fn outcomes(self) -> &'static [Outcome] {
        match self {
            Alphabet::Binary => &Outcome::BINARY,
            Alphabet::Ternary => &Outcome::ALL,
        }
    }
}

/// Deterministic local strategy: one output per local setting on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub left: [Outcome; 2],
    pub right: [Outcome; 2],
}

impl DeterministicStrategy {
    pub fn outcomes(&self, pair: SettingPair) -> (Outcome, Outcome) {
        (self.left[pair.a as usize], self.right[pair.b as usize])
    }

    pub fn has_nulls(&self) -> bool {
        self.left.iter().chain(self.right.iter()).any(|o| o.is_null())
    }

    /// Signed CHSH combination of the strategy's products; nulls contribute 0.
    pub fn signed_score(&self) -> f64 {
        let products = SettingPair::ALL.map(|p| {
            let (a, b) = self.outcomes(p);
            (a.value() * b.value()) as f64
        });
        signed_chsh(&products)
    }

    /// Number of joint settings at which the strategy wins the CHSH game.
    pub fn wins(&self, targets: &[i8; 4]) -> usize {
        SettingPair::ALL
            .iter()
            .filter(|p| {
                let (a, b) = self.outcomes(**p);
                a.value() * b.value() == targets[p.index()]
            })
            .count()
    }
}

/// All `|alphabet|⁴` joint deterministic strategies, left outputs varying
/// slowest.
pub fn enumerate_deterministic_strategies(alphabet: Alphabet) -> Vec<DeterministicStrategy> {
    let outs = alphabet.outcomes();
    let mut all = Vec::with_capacity(outs.len().pow(4));
    for &l0 in outs {
        for &l1 in outs {
            for &r0 in outs {
                for &r1 in outs {
                    all.push(DeterministicStrategy {
                        left: [l0, l1],
                        right: [r0, r1],
                    });
                }
            }
        }
    }
    all
}

/// Hidden-state distribution, possibly dependent on the joint setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prior {
    Unconditional(Vec<f64>),
    /// `p(λ|a,b)` for the four joint settings in `(a,b), (a,b'), (a',b), (a',b')` order.
    Conditional([Vec<f64>; 4]),
}

/// `p(outcome | setting, λ)` over `(+1, -1, 0)` for settings 0 and 1.
pub type ResponseTable = [[f64; 3]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct HiddenVariableModel {
    lambda_support: Vec<String>,
    alphabet: Alphabet,
    prior: Prior,
    left_response: Vec<ResponseTable>,
    right_response: Vec<ResponseTable>,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    lambda_support: Vec<String>,
    alphabet: Alphabet,
    prior: Prior,
    left_response: Vec<ResponseTable>,
    right_response: Vec<ResponseTable>,
}

impl TryFrom<ModelRepr> for HiddenVariableModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        HiddenVariableModel::new(r.lambda_support, r.alphabet, r.prior, r.left_response, r.right_response)
    }
}

impl From<HiddenVariableModel> for ModelRepr {
    fn from(m: HiddenVariableModel) -> Self {
        ModelRepr {
            lambda_support: m.lambda_support,
            alphabet: m.alphabet,
            prior: m.prior,
            left_response: m.left_response,
            right_response: m.right_response,
        }
    }
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::domain(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::domain(format!("{what} sums to {total}, expected 1")));
    }
    Ok(())
}

impl HiddenVariableModel {
    pub fn new(
        lambda_support: Vec<String>,
        alphabet: Alphabet,
        prior: Prior,
        left_response: Vec<ResponseTable>,
        right_response: Vec<ResponseTable>,
    ) -> Result<Self> {
        let n = lambda_support.len();
        if n == 0 {
            return Err(Error::domain("λ support is empty"));
        }
        if left_response.len() != n || right_response.len() != n {
            return Err(Error::domain("response tables must have one entry per λ"));
        }
        match &prior {
            Prior::Unconditional(p) => {
                if p.len() != n {
                    return Err(Error::domain("prior length differs from λ support"));
                }
                check_distribution(p, "p(λ)")?;
            }
            Prior::Conditional(rows) => {
                for (i, p) in rows.iter().enumerate() {
                    if p.len() != n {
                        return Err(Error::domain("conditional prior length differs from λ support"));
                    }
                    check_distribution(p, &format!("p(λ|{})", SettingPair::from_index(i)))?;
                }
            }
        }
        for (side, tables) in [("left", &left_response), ("right", &right_response)] {
            for (l, table) in tables.iter().enumerate() {
                for (s, row) in table.iter().enumerate() {
                    check_distribution(row, &format!("{side} response (λ={l}, setting={s})"))?;
                    if alphabet == Alphabet::Binary && row[2] != 0.0 {
                        return Err(Error::domain(format!(
                            "{side} response (λ={l}, setting={s}) emits 0 in a binary-alphabet model"
                        )));
                    }
                }
            }
        }
        Ok(HiddenVariableModel {
            lambda_support,
            alphabet,
            prior,
            left_response,
            right_response,
        })
    }

    /// Mixture of deterministic strategies with a setting-independent prior.
    pub fn from_strategies(strategies: &[DeterministicStrategy], weights: Vec<f64>) -> Result<Self> {
        let (support, alphabet, left, right) = Self::strategy_tables(strategies);
        Self::new(support, alphabet, Prior::Unconditional(weights), left, right)
    }

    /// Deterministic strategies with a setting-dependent prior `p(λ|a,b)`.
    pub fn from_conditional_strategies(strategies: &[DeterministicStrategy], conditional: [Vec<f64>; 4]) -> Result<Self> {
        let (support, alphabet, left, right) = Self::strategy_tables(strategies);
        Self::new(support, alphabet, Prior::Conditional(conditional), left, right)
    }

    fn strategy_tables(
        strategies: &[DeterministicStrategy],
    ) -> (Vec<String>, Alphabet, Vec<ResponseTable>, Vec<ResponseTable>) {
        let alphabet = if strategies.iter().any(|s| s.has_nulls()) {
            Alphabet::Ternary
        } else {
            Alphabet::Binary
        };
        let one_hot = |o: Outcome| {
            let mut row = [0.0; 3];
            row[o.index()] = 1.0;
            row
        };
        let support = strategies.iter().map(strategy_label).collect();
        let left = strategies.iter().map(|s| s.left.map(one_hot)).collect();
        let right = strategies.iter().map(|s| s.right.map(one_hot)).collect();
        (support, alphabet, left, right)
    }

    pub fn lambda_support(&self) -> &[String] {
        &self.lambda_support
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn left_response(&self) -> &[ResponseTable] {
        &self.left_response
    }

    pub fn right_response(&self) -> &[ResponseTable] {
        &self.right_response
    }

    pub fn is_setting_dependent(&self) -> bool {
        matches!(self.prior, Prior::Conditional(_))
    }

    /// `p(λ|a,b)`, or `p(λ)` for an unconditional prior.
    pub fn prior_given(&self, pair: SettingPair) -> &[f64] {
        match &self.prior {
            Prior::Unconditional(p) => p,
            Prior::Conditional(rows) => &rows[pair.index()],
        }
    }

    /// `Σ_λ p(λ|a,b) p(A|a,λ) p(B|b,λ)`.
    pub fn conditional_probability(&self, a_out: Outcome, b_out: Outcome, a: u8, b: u8) -> Result<f64> {
        let pair = SettingPair::new(a, b)?;
        Ok(self.joint(pair, a_out, b_out))
    }

    pub(crate) fn joint(&self, pair: SettingPair, a_out: Outcome, b_out: Outcome) -> f64 {
        self.prior_given(pair)
            .iter()
            .enumerate()
            .map(|(l, w)| {
                w * self.left_response[l][pair.a as usize][a_out.index()]
                    * self.right_response[l][pair.b as usize][b_out.index()]
            })
            .sum()
    }

    pub fn sample_lambda<R: Rng + ?Sized>(&self, pair: SettingPair, rng: &mut R) -> usize {
        sample_index(self.prior_given(pair), rng)
    }

    pub fn sample_outcomes<R: Rng + ?Sized>(&self, lambda: usize, pair: SettingPair, rng: &mut R) -> (Outcome, Outcome) {
        let a = Outcome::ALL[sample_index(&self.left_response[lambda][pair.a as usize], rng)];
        let b = Outcome::ALL[sample_index(&self.right_response[lambda][pair.b as usize], rng)];
        (a, b)
    }
}

pub(crate) fn strategy_label(s: &DeterministicStrategy) -> String {
    let c = |o: &Outcome| match o {
        Outcome::Plus => '+',
        Outcome::Minus => '-',
        Outcome::Null => '0',
    };
    format!(
        "{}{}|{}{}",
        c(&s.left[0]),
        c(&s.left[1]),
        c(&s.right[0]),
        c(&s.right[1])
    )
}

/// Inverse-CDF draw from a discrete distribution.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// `E(a,b)` of a model. Ternary models need an explicit null convention;
/// binary models ignore it.
pub fn model_correlation(model: &HiddenVariableModel, pair: SettingPair, convention: Option<NullConvention>) -> Result<f64> {
    let convention = match (model.alphabet, convention) {
        (Alphabet::Binary, _) => NullConvention::DiscardNulls,
        (Alphabet::Ternary, Some(c)) => c,
        (Alphabet::Ternary, None) => {
            return Err(Error::usage("model emits null outcomes; choose a null convention"));
        }
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for a in Outcome::ALL {
        for b in Outcome::ALL {
            let p = model.joint(pair, a, b);
            if p == 0.0 {
                continue;
            }
            if let Some((x, y)) = convention.apply(a, b) {
                num += p * (x * y) as f64;
                den += p;
            }
        }
    }
    if den <= 0.0 {
        return Err(Error::insufficient(format!("no detected coincidences at {pair}")));
    }
    Ok(num / den)
}

pub fn model_correlations(model: &HiddenVariableModel, convention: Option<NullConvention>) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for pair in SettingPair::ALL {
        out[pair.index()] = model_correlation(model, pair, convention)?;
    }
    Ok(out)
}

pub fn model_chsh(model: &HiddenVariableModel, convention: Option<NullConvention>) -> Result<f64> {
    Ok(signed_chsh(&model_correlations(model, convention)?).abs())
}

/// Largest `S` over all 16 deterministic `±1` strategies.
pub fn brute_force_max_chsh() -> f64 {
    enumerate_deterministic_strategies(Alphabet::Binary)
        .iter()
        .map(|s| s.signed_score().abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Deterministic `±1` strategies that reach the local bound.
pub fn maximizing_strategies() -> Vec<DeterministicStrategy> {
    let best = brute_force_max_chsh();
    enumerate_deterministic_strategies(Alphabet::Binary)
        .into_iter()
        .filter(|s| s.signed_score().abs() == best)
        .collect()
}

/// Mutual information (bits) between the hidden state and the joint setting,
/// with `p(λ) = Σ p(λ|a,b) p(a,b)`.
pub fn mutual_information(model: &HiddenVariableModel, setting_distribution: &[f64; 4]) -> Result<f64> {
    check_distribution(setting_distribution, "p(a,b)")?;
    let rows: [&[f64]; 4] = SettingPair::ALL.map(|p| model.prior_given(p));
    Ok(mutual_information_of(&rows, setting_distribution))
}

pub(crate) fn mutual_information_of(rows: &[&[f64]; 4], setting_distribution: &[f64; 4]) -> f64 {
    let n = rows[0].len();
    let marginal: Vec<f64> = (0..n)
        .map(|l| (0..4).map(|k| rows[k][l] * setting_distribution[k]).sum())
        .collect();
    let mut info = 0.0;
    for k in 0..4 {
        for l in 0..n {
            let q = rows[k][l];
            if q > 0.0 && setting_distribution[k] > 0.0 {
                info += q * setting_distribution[k] * (q / marginal[l]).log2();
            }
        }
    }
    info.max(0.0)
}

/// Outcome model in which station B is told station A's setting.
///
/// `A` is a fair coin; `B = A` with probability `(1 + E(a,b))/2`. This is not
/// a local model and is always flagged as locality-violating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommunicationModel {
    targets: [f64; 4],
}

pub fn one_bit_communication_model(targets: [f64; 4]) -> Result<CommunicationModel> {
    if let Some(e) = targets.iter().find(|e| !e.is_finite() || e.abs() > 1.0) {
        return Err(Error::domain(format!("target correlation {e} outside [-1, 1]")));
    }
    Ok(CommunicationModel { targets })
}

impl CommunicationModel {
    pub fn targets(&self) -> &[f64; 4] {
        &self.targets
    }

    pub fn locality_violating(&self) -> bool {
        true
    }

    pub fn sample<R: Rng + ?Sized>(&self, pair: SettingPair, rng: &mut R) -> (Outcome, Outcome) {
        let a = if rng.random::<bool>() { Outcome::Plus } else { Outcome::Minus };
        let same = rng.random::<f64>() < (1.0 + self.targets[pair.index()]) / 2.0;
        let b = if same { a } else { a.flipped() };
        (a, b)
    }
}

/// Publicly recorded result of one finished trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistoryEntry {
    pub pair: SettingPair,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
}

/// A history-dependent local strategy.
///
/// `next_strategy` is called before the settings of the coming trial exist, so
/// the returned table can depend only on past records.
pub trait MemoryStrategy {
    fn next_strategy(&mut self) -> DeterministicStrategy;
    fn observe(&mut self, entry: &HistoryEntry);
}

/// Available memory adversaries, selectable from configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    /// Walk through the optimal deterministic strategies, moving on after each loss.
    CycleOnLoss,
    /// Pick the strategy that would have won most often on the settings seen so far.
    ExploitFrequencies,
}

impl MemoryKind {
    pub fn build(self) -> Box<dyn MemoryStrategy + Send> {
        match self {
            MemoryKind::CycleOnLoss => Box::new(CycleOnLoss::new()),
            MemoryKind::ExploitFrequencies => Box::new(ExploitFrequencies::new()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CycleOnLoss {
    optimal: Vec<DeterministicStrategy>,
    position: usize,
}

impl CycleOnLoss {
    pub fn new() -> Self {
        let optimal = enumerate_deterministic_strategies(Alphabet::Binary)
            .into_iter()
            .filter(|s| s.wins(&BELL_PLUS_TARGETS) == 3)
            .collect();
        CycleOnLoss { optimal, position: 0 }
    }
}

impl Default for CycleOnLoss {
    fn default() -> Self {
        Self::new()
    }
}

impl MemoryStrategy for CycleOnLoss {
    fn next_strategy(&mut self) -> DeterministicStrategy {
        self.optimal[self.position]
    }

    fn observe(&mut self, entry: &HistoryEntry) {
        let product = entry.outcome_a.value() * entry.outcome_b.value();
        if product != BELL_PLUS_TARGETS[entry.pair.index()] {
            self.position = (self.position + 1) % self.optimal.len();
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExploitFrequencies {
    counts: [u64; 4],
    candidates: Vec<DeterministicStrategy>,
}

impl ExploitFrequencies {
    pub fn new() -> Self {
        ExploitFrequencies {
            counts: [0; 4],
            candidates: enumerate_deterministic_strategies(Alphabet::Binary),
        }
    }
}

impl Default for ExploitFrequencies {
    fn default() -> Self {
        Self::new()
    }
}

impl MemoryStrategy for ExploitFrequencies {
    fn next_strategy(&mut self) -> DeterministicStrategy {
        let score = |s: &DeterministicStrategy| -> u64 {
            SettingPair::ALL
                .iter()
                .filter(|p| {
                    let (a, b) = s.outcomes(**p);
                    a.value() * b.value() == BELL_PLUS_TARGETS[p.index()]
                })
                .map(|p| self.counts[p.index()])
                .sum()
        };
        // first maximizer wins ties, keeping the choice deterministic
        let mut best = self.candidates[0];
        let mut best_score = score(&best);
        for s in &self.candidates[1..] {
            let v = score(s);
            if v > best_score {
                best = *s;
                best_score = v;
            }
        }
        best
    }

    fn observe(&mut self, entry: &HistoryEntry) {
        self.counts[entry.pair.index()] += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::collections::HashSet;

    fn det(l: [i8; 2], r: [i8; 2]) -> DeterministicStrategy {
        DeterministicStrategy {
            left: l.map(|v| Outcome::try_from(v).unwrap()),
            right: r.map(|v| Outcome::try_from(v).unwrap()),
        }
    }

    #[test]
    fn single_lambda_fixed_outputs() {
        let m = HiddenVariableModel::from_strategies(&[det([1, 1], [-1, -1])], vec![1.0]).unwrap();
        for pair in SettingPair::ALL {
            let p = m.conditional_probability(Outcome::Plus, Outcome::Minus, pair.a, pair.b).unwrap();
            assert_eq!(p, 1.0);
            assert_abs_diff_eq!(model_correlation(&m, pair, None).unwrap(), -1.0);
        }
        assert!(matches!(
            m.conditional_probability(Outcome::Plus, Outcome::Minus, 2, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn two_lambda_flip_symmetry() {
        let m = HiddenVariableModel::from_strategies(&[det([1, 1], [1, 1]), det([-1, -1], [-1, -1])], vec![0.5, 0.5])
            .unwrap();
        let p = |a, b| m.conditional_probability(a, b, 0, 1).unwrap();
        assert_eq!(p(Outcome::Plus, Outcome::Plus), 0.5);
        assert_eq!(p(Outcome::Minus, Outcome::Minus), 0.5);
        assert_eq!(p(Outcome::Plus, Outcome::Minus), 0.0);
    }

    #[test]
    fn conditional_prior_matches_hand_sum() {
        // λ0: A=+1 always, B follows b (b→+1, b'→-1); λ1: A=-1, B=+1 always
        let s0 = det([1, 1], [1, -1]);
        let s1 = det([-1, -1], [1, 1]);
        let cond = [vec![0.7, 0.3], vec![0.2, 0.8], vec![0.5, 0.5], vec![1.0, 0.0]];
        let m = HiddenVariableModel::from_conditional_strategies(&[s0, s1], cond.clone()).unwrap();
        // hand evaluation of Σ_λ p(λ|a,b) [A(a,λ)=A][B(b,λ)=B]
        for pair in SettingPair::ALL {
            let w = &cond[pair.index()];
            for a in Outcome::BINARY {
                for b in Outcome::BINARY {
                    let mut expected = 0.0;
                    for (l, s) in [s0, s1].iter().enumerate() {
                        let (x, y) = s.outcomes(pair);
                        if x == a && y == b {
                            expected += w[l];
                        }
                    }
                    let got = m.conditional_probability(a, b, pair.a, pair.b).unwrap();
                    assert_abs_diff_eq!(got, expected, epsilon = 1e-15);
                }
            }
        }
        // p(+,+|a,b') = 0.2·[s0 gives (+,-)] + 0.8·[s1 gives (-,+)] = 0
        assert_eq!(m.conditional_probability(Outcome::Plus, Outcome::Plus, 0, 1).unwrap(), 0.0);
        assert_abs_diff_eq!(
            m.conditional_probability(Outcome::Minus, Outcome::Plus, 0, 1).unwrap(),
            0.8,
            epsilon = 1e-15
        );
    }

    #[test]
    fn independent_outputs_uncorrelated() {
        let half = [[0.5, 0.5, 0.0]; 2];
        let m = HiddenVariableModel::new(
            vec!["coin".into()],
            Alphabet::Binary,
            Prior::Unconditional(vec![1.0]),
            vec![half],
            vec![half],
        )
        .unwrap();
        for pair in SettingPair::ALL {
            assert_abs_diff_eq!(model_correlation(&m, pair, None).unwrap(), 0.0);
        }
    }

    #[test]
    fn uniform_mixture_of_all_strategies() {
        let all = enumerate_deterministic_strategies(Alphabet::Binary);
        let m = HiddenVariableModel::from_strategies(&all, vec![1.0 / 16.0; 16]).unwrap();
        // enumeration: for each pair the 16 strategies split evenly between A·B = ±1
        for pair in SettingPair::ALL {
            let plus = all
                .iter()
                .filter(|s| {
                    let (a, b) = s.outcomes(pair);
                    a.value() * b.value() == 1
                })
                .count();
            assert_eq!(plus, 8);
            assert_abs_diff_eq!(model_correlation(&m, pair, None).unwrap(), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(model_chsh(&m, None).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn strategy_enumeration() {
        let bin = enumerate_deterministic_strategies(Alphabet::Binary);
        let ter = enumerate_deterministic_strategies(Alphabet::Ternary);
        assert_eq!(bin.len(), 16);
        assert_eq!(ter.len(), 81);
        assert_eq!(bin.iter().collect::<HashSet<_>>().len(), 16);
        assert_eq!(ter.iter().collect::<HashSet<_>>().len(), 81);
    }

    #[test]
    fn brute_force_bound() {
        assert_eq!(brute_force_max_chsh(), 2.0);
        let maximizers = maximizing_strategies();
        assert!(maximizers.len() > 1);
        // every ±1 strategy scores exactly ±2 on the signed combination
        assert_eq!(maximizers.len(), 16);
        for s in &maximizers {
            let m = HiddenVariableModel::from_strategies(&[*s], vec![1.0]).unwrap();
            assert_eq!(model_chsh(&m, None).unwrap(), 2.0);
        }
    }

    #[test]
    fn ternary_model_needs_convention() {
        let m = HiddenVariableModel::from_strategies(&[det([1, 0], [1, 1])], vec![1.0]).unwrap();
        assert_eq!(m.alphabet(), Alphabet::Ternary);
        let pair = SettingPair::new(1, 0).unwrap();
        assert!(matches!(model_correlation(&m, pair, None), Err(Error::Usage(_))));
        assert_eq!(model_correlation(&m, pair, Some(NullConvention::NullAsMinus)).unwrap(), -1.0);
        assert!(matches!(
            model_correlation(&m, pair, Some(NullConvention::DiscardNulls)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn invalid_models_rejected() {
        let s = [det([1, 1], [1, 1])];
        assert!(HiddenVariableModel::from_strategies(&s, vec![0.5]).is_err());
        assert!(HiddenVariableModel::from_strategies(&s, vec![1.0, 0.0]).is_err());
        let neg = HiddenVariableModel::new(
            vec!["x".into()],
            Alphabet::Binary,
            Prior::Unconditional(vec![1.0]),
            vec![[[1.5, -0.5, 0.0]; 2]],
            vec![[[1.0, 0.0, 0.0]; 2]],
        );
        assert!(matches!(neg, Err(Error::Domain(_))));
        let null_in_binary = HiddenVariableModel::new(
            vec!["x".into()],
            Alphabet::Binary,
            Prior::Unconditional(vec![1.0]),
            vec![[[0.5, 0.0, 0.5]; 2]],
            vec![[[1.0, 0.0, 0.0]; 2]],
        );
        assert!(null_in_binary.is_err());
    }

    #[test]
    fn model_json_roundtrip_validates() {
        let all = enumerate_deterministic_strategies(Alphabet::Binary);
        let cond = [
            vec![1.0 / 16.0; 16],
            vec![1.0 / 16.0; 16],
            vec![1.0 / 16.0; 16],
            vec![1.0 / 16.0; 16],
        ];
        let m = HiddenVariableModel::from_conditional_strategies(&all, cond).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: HiddenVariableModel = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
        let broken = text.replacen("0.0625", "0.5", 1);
        assert!(serde_json::from_str::<HiddenVariableModel>(&broken).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let uniform = [0.25; 4];
        let all = enumerate_deterministic_strategies(Alphabet::Binary);
        let m = HiddenVariableModel::from_strategies(&all, vec![1.0 / 16.0; 16]).unwrap();
        assert_eq!(mutual_information(&m, &uniform).unwrap(), 0.0);

        // λ copies the joint setting
        let four: Vec<_> = all[..4].to_vec();
        let copy = [0, 1, 2, 3].map(|k| {
            let mut row = vec![0.0; 4];
            row[k] = 1.0;
            row
        });
        let m = HiddenVariableModel::from_conditional_strategies(&four, copy).unwrap();
        assert_abs_diff_eq!(mutual_information(&m, &uniform).unwrap(), 2.0, epsilon = 1e-12);

        // λ copies a only
        let two: Vec<_> = all[..2].to_vec();
        let copy_a = [vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        let m = HiddenVariableModel::from_conditional_strategies(&two, copy_a).unwrap();
        assert_abs_diff_eq!(mutual_information(&m, &uniform).unwrap(), 1.0, epsilon = 1e-12);

        assert!(matches!(
            mutual_information(&m, &[0.5, 0.5, 0.5, -0.5]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn communication_model_flags() {
        assert!(one_bit_communication_model([0.0, 1.2, 0.0, 0.0]).is_err());
        let c = one_bit_communication_model([-1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(c.locality_violating());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (a, b) = c.sample(SettingPair::ALL[0], &mut rng);
            assert_eq!(b, a.flipped());
        }
    }

    #[test]
    fn memory_strategies_stay_local() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for kind in [MemoryKind::CycleOnLoss, MemoryKind::ExploitFrequencies] {
            let mut strat = kind.build();
            for _ in 0..500 {
                let s = strat.next_strategy();
                assert!(s.signed_score().abs() <= 2.0);
                assert!(s.wins(&BELL_PLUS_TARGETS) <= 3);
                let pair = SettingPair::from_index(rng.random_range(0..4));
                let (a, b) = s.outcomes(pair);
                strat.observe(&HistoryEntry {
                    pair,
                    outcome_a: a,
                    outcome_b: b,
                });
            }
        }
    }

    fn arb_binary_model() -> impl Strategy<Value = HiddenVariableModel> {
        (1usize..6)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(0.01f64..1.0, n),
                    proptest::collection::vec(proptest::array::uniform2(0.0f64..=1.0), n),
                    proptest::collection::vec(proptest::array::uniform2(0.0f64..=1.0), n),
                )
            })
            .prop_map(|(w, left, right)| {
                let total: f64 = w.iter().sum();
                let prior: Vec<f64> = w.iter().map(|x| x / total).collect();
                let table = |p: [f64; 2]| p.map(|q| [q, 1.0 - q, 0.0]);
                let n = prior.len();
                HiddenVariableModel::new(
                    (0..n).map(|i| format!("l{i}")).collect(),
                    Alphabet::Binary,
                    Prior::Unconditional(prior),
                    left.into_iter().map(table).collect(),
                    right.into_iter().map(table).collect(),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn structural_locality_bound(m in arb_binary_model()) {
            prop_assert!(model_chsh(&m, None).unwrap() <= 2.0 + 1e-12);
            for pair in SettingPair::ALL {
                let total: f64 = Outcome::ALL.iter()
                    .flat_map(|a| Outcome::ALL.iter().map(move |b| (*a, *b)))
                    .map(|(a, b)| m.conditional_probability(a, b, pair.a, pair.b).unwrap())
                    .sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn mutual_information_nonnegative(rows in proptest::array::uniform4(proptest::collection::vec(0.0f64..1.0, 3))) {
            let norm = |r: &Vec<f64>| -> Vec<f64> {
                let t: f64 = r.iter().sum::<f64>() + 1e-3;
                let mut v: Vec<f64> = r.iter().map(|x| x / t).collect();
                v[0] += 1e-3 / t;
                v
            };
            let cond = [norm(&rows[0]), norm(&rows[1]), norm(&rows[2]), norm(&rows[3])];
            let strategies = &enumerate_deterministic_strategies(Alphabet::Binary)[..3];
            let m = HiddenVariableModel::from_conditional_strategies(strategies, cond.clone()).unwrap();
            let i = mutual_information(&m, &[0.25; 4]).unwrap();
            prop_assert!(i >= 0.0);
            let same = cond.iter().all(|r| r.iter().zip(&cond[0]).all(|(x, y)| (x - y).abs() < 1e-12));
            if same {
                prop_assert!(i < 1e-12);
            }
        }
    }
}
