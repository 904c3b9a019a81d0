//! Flat-spacetime causal checks with `c = 1`.
//!
//! Units are whatever the caller uses consistently: seconds with
//! light-seconds, years with lightyears, or meters of light travel for lab
//! geometries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lightlike band half-width, relative to the squared largest coordinate.
const RELATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EventRepr", into = "EventRepr")]
pub struct SpacetimeEvent {
    pub label: String,
    pub t: f64,
    pub x: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct EventRepr {
    label: String,
    t: f64,
    x: f64,
    #[serde(default)]
    y: f64,
    #[serde(default)]
    z: f64,
}

impl TryFrom<EventRepr> for SpacetimeEvent {
    type Error = Error;

    fn try_from(r: EventRepr) -> Result<Self> {
        SpacetimeEvent::new(r.label, r.t, [r.x, r.y, r.z])
    }
}

impl From<SpacetimeEvent> for EventRepr {
    fn from(e: SpacetimeEvent) -> Self {
        EventRepr {
            label: e.label,
            t: e.t,
            x: e.x[0],
            y: e.x[1],
            z: e.x[2],
        }
    }
}

impl SpacetimeEvent {
    pub fn new(label: impl Into<String>, t: f64, x: [f64; 3]) -> Result<Self> {
        let label = label.into();
        if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("event '{label}' has non-finite coordinates")));
        }
        Ok(SpacetimeEvent { label, t, x })
    }

    /// Event on the x axis.
    pub fn on_axis(label: impl Into<String>, t: f64, x: f64) -> Result<Self> {
        Self::new(label, t, [x, 0.0, 0.0])
    }

    fn scale(&self) -> f64 {
        self.x.iter().fold(self.t.abs(), |m, v| m.max(v.abs()))
    }

    /// Apply a boost with velocity `v` (|v| < 1) along x.
    pub fn boosted_x(&self, v: f64) -> Self {
        let gamma = 1.0 / (1.0 - v * v).sqrt();
        SpacetimeEvent {
            label: self.label.clone(),
            t: gamma * (self.t - v * self.x[0]),
            x: [gamma * (self.x[0] - v * self.t), self.x[1], self.x[2]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalKind {
    Spacelike,
    Timelike,
    Lightlike,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    /// `(Δt)² - |Δx|²`
    pub s2: f64,
    pub kind: IntervalKind,
}

pub fn interval(e1: &SpacetimeEvent, e2: &SpacetimeEvent) -> Interval {
    let dt = e2.t - e1.t;
    let dx2: f64 = (0..3).map(|i| (e2.x[i] - e1.x[i]).powi(2)).sum();
    let s2 = dt * dt - dx2;
    let scale = e1.scale().max(e2.scale());
    let tol = RELATIVE_TOL * scale * scale;
    let kind = if s2.abs() <= tol {
        IntervalKind::Lightlike
    } else if s2 < 0.0 {
        IntervalKind::Spacelike
    } else {
        IntervalKind::Timelike
    };
    Interval { s2, kind }
}

/// True when `earlier` lies on or inside the past light cone of `later`.
pub fn in_causal_past(earlier: &SpacetimeEvent, later: &SpacetimeEvent) -> bool {
    let iv = interval(earlier, later);
    iv.kind != IntervalKind::Spacelike && later.t >= earlier.t - tol_for(earlier, later).sqrt()
}

fn tol_for(e1: &SpacetimeEvent, e2: &SpacetimeEvent) -> f64 {
    let scale = e1.scale().max(e2.scale());
    RELATIVE_TOL * scale * scale
}

fn spacelike(e1: &SpacetimeEvent, e2: &SpacetimeEvent) -> bool {
    interval(e1, e2).kind == IntervalKind::Spacelike
}

/// One evaluated event pair inside a condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub first: String,
    pub second: String,
    pub requirement: String,
    pub s2: f64,
    pub kind: IntervalKind,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub id: u8,
    pub description: String,
    pub pass: bool,
    pub checks: Vec<PairCheck>,
}

impl ConditionVerdict {
    pub fn violations(&self) -> impl Iterator<Item = &PairCheck> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrangementReport {
    pub pass: bool,
    pub conditions: Vec<ConditionVerdict>,
}

impl ArrangementReport {
    /// Ids of the conditions that failed, in ascending order.
    pub fn failed(&self) -> Vec<u8> {
        self.conditions.iter().filter(|c| !c.pass).map(|c| c.id).collect()
    }
}

enum Requirement {
    Spacelike,
    CausalPast,
}

fn check(first: &SpacetimeEvent, second: &SpacetimeEvent, req: Requirement) -> PairCheck {
    let iv = interval(first, second);
    let (ok, requirement) = match req {
        Requirement::Spacelike => (spacelike(first, second), "spacelike"),
        Requirement::CausalPast => (in_causal_past(first, second), "causal past"),
    };
    PairCheck {
        first: first.label.clone(),
        second: second.label.clone(),
        requirement: requirement.to_string(),
        s2: iv.s2,
        kind: iv.kind,
        ok,
    }
}

fn verdict(id: u8, description: &str, checks: Vec<PairCheck>) -> ConditionVerdict {
    ConditionVerdict {
        id,
        description: description.to_string(),
        pass: checks.iter().all(|c| c.ok),
        checks,
    }
}

/// Verify the five-event arrangement that blocks light-speed explanations of
/// the correlations.
///
/// 1. outcome A spacelike from choice b
/// 2. outcome B spacelike from choice a
/// 3. the two outcomes spacelike from each other
/// 4. each choice in the causal past of its own outcome
/// 5. emission in the causal past of both outcomes
/// 6. both choices spacelike from the emission
pub fn check_locality_arrangement(
    choose_a: &SpacetimeEvent,
    choose_b: &SpacetimeEvent,
    emission: &SpacetimeEvent,
    outcome_a: &SpacetimeEvent,
    outcome_b: &SpacetimeEvent,
) -> Result<ArrangementReport> {
    let events = [choose_a, choose_b, emission, outcome_a, outcome_b];
    for (i, e) in events.iter().enumerate() {
        if events[..i].iter().any(|o| o.label == e.label) {
            return Err(Error::usage(format!("duplicate event label '{}'", e.label)));
        }
    }
    use Requirement::*;
    let conditions = vec![
        verdict(
            1,
            "outcome A spacelike from choice of b",
            vec![check(outcome_a, choose_b, Spacelike)],
        ),
        verdict(
            2,
            "outcome B spacelike from choice of a",
            vec![check(outcome_b, choose_a, Spacelike)],
        ),
        verdict(3, "outcomes spacelike from each other", vec![check(outcome_a, outcome_b, Spacelike)]),
        verdict(
            4,
            "each setting choice in the causal past of its own outcome",
            vec![check(choose_a, outcome_a, CausalPast), check(choose_b, outcome_b, CausalPast)],
        ),
        verdict(
            5,
            "emission in the causal past of both outcomes",
            vec![check(emission, outcome_a, CausalPast), check(emission, outcome_b, CausalPast)],
        ),
        verdict(
            6,
            "setting choices spacelike from the emission",
            vec![check(choose_a, emission, Spacelike), check(choose_b, emission, Spacelike)],
        ),
    ];
    Ok(ArrangementReport {
        pass: conditions.iter().all(|c| c.pass),
        conditions,
    })
}

/// Audit a labeled event set. Labels `choose_a`, `choose_b`, `emission`,
/// `outcome_a` and `outcome_b` must each appear exactly once.
pub fn check_event_set(events: &[SpacetimeEvent]) -> Result<ArrangementReport> {
    const ROLES: [&str; 5] = ["choose_a", "choose_b", "emission", "outcome_a", "outcome_b"];
    for (i, e) in events.iter().enumerate() {
        if events[..i].iter().any(|o| o.label == e.label) {
            return Err(Error::usage(format!("duplicate event label '{}'", e.label)));
        }
    }
    let find = |role: &str| {
        events
            .iter()
            .find(|e| e.label == role)
            .ok_or_else(|| Error::usage(format!("event set is missing '{role}'")))
    };
    let [ca, cb, em, oa, ob] = ROLES.map(find);
    check_locality_arrangement(ca?, cb?, em?, oa?, ob?)
}

/// Every pairwise interval of an event set, for user-defined predicates.
pub fn interval_table(events: &[SpacetimeEvent]) -> Vec<(String, String, Interval)> {
    let mut out = Vec::new();
    for (i, e1) in events.iter().enumerate() {
        for e2 in &events[i + 1..] {
            out.push((e1.label.clone(), e2.label.clone(), interval(e1, e2)));
        }
    }
    out
}

/// Latest time of any event lying in the causal past of both events.
pub fn latest_common_cause(e1: &SpacetimeEvent, e2: &SpacetimeEvent) -> f64 {
    let d = (0..3).map(|i| (e1.x[i] - e2.x[i]).powi(2)).sum::<f64>().sqrt();
    let apex = 0.5 * (e1.t + e2.t - d);
    apex.min(e1.t).min(e2.t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocExclusion {
    /// Most recent time at which a setting-determining emission happened; any
    /// local mechanism correlating settings with the source must act before it.
    pub exclusion_time: f64,
    /// Latest common cause of the most recent emissions on the two sides.
    pub latest_common_cause: f64,
}

/// Exclusion time for setting sources on the two sides.
pub fn foc_exclusion_time(side_a: &[SpacetimeEvent], side_b: &[SpacetimeEvent]) -> Result<FocExclusion> {
    let latest = |side: &[SpacetimeEvent], name: &str| -> Result<SpacetimeEvent> {
        side.iter()
            .max_by(|x, y| x.t.total_cmp(&y.t))
            .cloned()
            .ok_or_else(|| Error::usage(format!("no setting-source events for side {name}")))
    };
    let a = latest(side_a, "A")?;
    let b = latest(side_b, "B")?;
    Ok(FocExclusion {
        exclusion_time: a.t.max(b.t),
        latest_common_cause: latest_common_cause(&a, &b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(label: &str, t: f64, x: f64) -> SpacetimeEvent {
        SpacetimeEvent::on_axis(label, t, x).unwrap()
    }

    #[test]
    fn interval_examples() {
        let o = ev("o", 0.0, 0.0);
        assert_eq!(interval(&o, &ev("p", 1.0, 0.5)).kind, IntervalKind::Timelike);
        assert_eq!(interval(&o, &ev("p", 1.0, 2.0)).kind, IntervalKind::Spacelike);
        assert_eq!(interval(&o, &ev("p", 1.0, 1.0)).kind, IntervalKind::Lightlike);
        assert_eq!(interval(&o, &ev("p", 1.0, 2.0)).s2, -3.0);
    }

    #[test]
    fn lightlike_survives_cosmological_scale() {
        let o = ev("o", -7.78e9, 7.78e9);
        let p = ev("p", 0.0, 0.0);
        assert_eq!(interval(&o, &p).kind, IntervalKind::Lightlike);
    }

    fn right_side() -> [SpacetimeEvent; 5] {
        [
            ev("choose_a", 0.4, 0.5),
            ev("choose_b", 0.4, -0.5),
            ev("emission", 0.0, 0.0),
            ev("outcome_a", 0.6, 0.6),
            ev("outcome_b", 0.6, -0.6),
        ]
    }

    #[test]
    fn spacelike_arrangement_passes() {
        let [ca, cb, em, oa, ob] = right_side();
        let r = check_locality_arrangement(&ca, &cb, &em, &oa, &ob).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.failed().is_empty());
    }

    #[test]
    fn choices_before_emission_fail_condition_six() {
        let [_, _, em, oa, ob] = right_side();
        let ca = ev("choose_a", -1.0, 0.5);
        let cb = ev("choose_b", -1.0, -0.5);
        let r = check_locality_arrangement(&ca, &cb, &em, &oa, &ob).unwrap();
        assert!(!r.pass);
        assert!(r.failed().contains(&6));
        let six = &r.conditions[5];
        assert_eq!(six.violations().count(), 2);
        assert!(six.violations().all(|c| c.kind == IntervalKind::Timelike));
    }

    #[test]
    fn late_measurement_fails_condition_three() {
        let [ca, cb, em, oa, _] = right_side();
        let ob = ev("outcome_b", 2.0, -0.6);
        let r = check_locality_arrangement(&ca, &cb, &em, &oa, &ob).unwrap();
        assert!(r.failed().contains(&3));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let [ca, _, em, oa, ob] = right_side();
        let cb = ev("choose_a", 0.4, -0.5);
        assert!(matches!(
            check_locality_arrangement(&ca, &cb, &em, &oa, &ob),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn event_set_lookup() {
        let events = right_side().to_vec();
        assert!(check_event_set(&events).unwrap().pass);
        assert!(matches!(check_event_set(&events[1..]), Err(Error::Usage(_))));
        assert_eq!(interval_table(&events).len(), 10);
    }

    #[test]
    fn event_json_format() {
        let e: SpacetimeEvent = serde_json::from_str(r#"{"label":"emission","t":1.5,"x":2,"y":0,"z":-1}"#).unwrap();
        assert_eq!(e.x, [2.0, 0.0, -1.0]);
        let text = serde_json::to_string(&e).unwrap();
        assert!(text.contains(r#""z":-1.0"#));
    }

    #[test]
    fn common_cause_examples() {
        let e = ev("e", 3.0, 1.0);
        assert_eq!(latest_common_cause(&e, &e), 3.0);
        let near = ev("near", -600.0, 600.0);
        let far = ev("far", -1930.0, -1930.0);
        assert_eq!(latest_common_cause(&near, &far), -2530.0);
        assert_eq!(latest_common_cause(&ev("l", 0.0, 1.0), &ev("r", 0.0, -1.0)), -1.0);
    }

    #[test]
    fn exclusion_times() {
        let stars = foc_exclusion_time(&[ev("s1", -600.0, 600.0)], &[ev("s2", -1930.0, -1930.0)]).unwrap();
        assert_eq!(stars.exclusion_time, -600.0);
        assert_eq!(stars.latest_common_cause, -2530.0);
        let quasars = foc_exclusion_time(&[ev("q1", -7.78e9, 7.78e9)], &[ev("q2", -12.21e9, -12.21e9)]).unwrap();
        assert_eq!(quasars.exclusion_time, -7.78e9);
        let lab = foc_exclusion_time(&[ev("r1", -1e-9, 1.0)], &[ev("r2", -2e-9, -1.0)]).unwrap();
        assert!(lab.exclusion_time.abs() < 1e-8);
        assert!(matches!(foc_exclusion_time(&[], &[ev("x", 0.0, 0.0)]), Err(Error::Usage(_))));
    }

    fn arb_event(label: &'static str) -> impl Strategy<Value = SpacetimeEvent> {
        (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0)
            .prop_map(move |(t, x, y, z)| SpacetimeEvent::new(label, t, [x, y, z]).unwrap())
    }

    proptest! {
        #[test]
        fn interval_is_symmetric(e1 in arb_event("p"), e2 in arb_event("q")) {
            prop_assert_eq!(interval(&e1, &e2), interval(&e2, &e1));
        }

        #[test]
        fn boost_preserves_classification(t1 in -5.0f64..5.0, x1 in -5.0f64..5.0, t2 in -5.0f64..5.0, x2 in -5.0f64..5.0, v in -0.9f64..0.9) {
            let e1 = ev("p", t1, x1);
            let e2 = ev("q", t2, x2);
            let before = interval(&e1, &e2);
            prop_assume!(before.s2.abs() > 1e-6);
            let after = interval(&e1.boosted_x(v), &e2.boosted_x(v));
            prop_assert_eq!(before.kind, after.kind);
            prop_assert!((before.s2 - after.s2).abs() < 1e-9 * (1.0 + before.s2.abs()) * 100.0);
        }

        #[test]
        fn common_cause_not_after_either(e1 in arb_event("p"), e2 in arb_event("q")) {
            let c = latest_common_cause(&e1, &e2);
            let m = e1.t.min(e2.t);
            prop_assert!(c <= m + 1e-12);
            let causal = in_causal_past(&e1, &e2) || in_causal_past(&e2, &e1);
            if causal {
                prop_assert!((c - m).abs() < 1e-9);
            } else {
                prop_assert!(c < m);
            }
        }
    }
}
