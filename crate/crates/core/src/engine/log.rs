use std::io::{Read, Write};
use std::path::Path;

use crate::chsh::{Outcome, SettingPair};
use crate::error::{Error, Result};
use crate::spacetime::SpacetimeEvent;

/// Event order in records and in CSV column groups.
pub const EVENT_LABELS: [&str; 5] = ["choose_a", "choose_b", "emission", "outcome_a", "outcome_b"];

const BASE_COLUMNS: [&str; 6] = ["trial", "setting_a", "setting_b", "outcome_a", "outcome_b", "heralded"];

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: u64,
    pub setting_a: u8,
    pub setting_b: u8,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    pub heralded: bool,
    /// `[t, x, y, z]` of each event in [`EVENT_LABELS`] order.
    pub events: Option<Box<[[f64; 4]; 5]>>,
}

impl TrialRecord {
    pub fn pair(&self) -> SettingPair {
        SettingPair {
            a: self.setting_a,
            b: self.setting_b,
        }
    }

    pub fn spacetime_events(&self) -> Option<[SpacetimeEvent; 5]> {
        let coords = self.events.as_deref()?;
        Some(std::array::from_fn(|i| SpacetimeEvent {
            label: EVENT_LABELS[i].to_string(),
            t: coords[i][0],
            x: [coords[i][1], coords[i][2], coords[i][3]],
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialLog {
    pub records: Vec<TrialRecord>,
    /// Label of the setting source that produced the log, empty when read from file.
    pub source: String,
    pub predictable: bool,
    pub locality_violating: bool,
}

impl TrialLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fails unless trial indices strictly increase.
    pub fn check_order(&self) -> Result<()> {
        for w in self.records.windows(2) {
            if w[1].index <= w[0].index {
                return Err(Error::domain(format!(
                    "trial {} follows trial {}; logs must be in trial order",
                    w[1].index, w[0].index
                )));
            }
        }
        Ok(())
    }

    pub fn has_events(&self) -> bool {
        self.records.first().is_some_and(|r| r.events.is_some())
    }
}

/// `%.9g`: 9 significant digits, trailing zeros dropped, exponent form
/// outside `[1e-4, 1e9)`.
pub(crate) fn format_g9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv<W: Write>(log: &TrialLog, writer: W) -> Result<()> {
    let with_events = log.has_events();
    if with_events && log.records.iter().any(|r| r.events.is_none()) {
        return Err(Error::usage("either every record or none may carry event coordinates"));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if with_events {
        for label in EVENT_LABELS {
            for axis in ["t", "x", "y", "z"] {
                header.push(format!("{axis}_{label}"));
            }
        }
    }
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for r in &log.records {
        row.clear();
        row.push(r.index.to_string());
        row.push(r.setting_a.to_string());
        row.push(r.setting_b.to_string());
        row.push(r.outcome_a.value().to_string());
        row.push(r.outcome_b.value().to_string());
        row.push(u8::from(r.heralded).to_string());
        if let Some(events) = r.events.as_deref() {
            row.extend(events.iter().flatten().map(|v| format_g9(*v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_path(log: &TrialLog, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(log, std::io::BufWriter::new(file))
}

fn bad(line: u64, msg: impl std::fmt::Display) -> Error {
    Error::domain(format!("trial log line {line}: {msg}"))
}

fn parse_setting(s: &str, line: u64) -> Result<u8> {
    match s.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(bad(line, format!("setting '{other}' is not 0 or 1"))),
    }
}

fn parse_outcome(s: &str, line: u64) -> Result<Outcome> {
    let v: i8 = s.trim().parse().map_err(|_| bad(line, format!("outcome '{s}' is not an integer")))?;
    Outcome::try_from(v).map_err(|e| bad(line, e))
}

fn parse_bool(s: &str, line: u64) -> Result<bool> {
    match s.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(bad(line, format!("heralded flag '{other}' is not 0/1"))),
    }
}

/// Read a log written by [`write_csv`]. Column order may differ; event
/// columns must be all present or all absent.
pub fn read_csv<R: Read>(reader: R) -> Result<TrialLog> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut base = [0usize; 6];
    for (slot, name) in base.iter_mut().zip(BASE_COLUMNS) {
        *slot = find(name).ok_or_else(|| Error::domain(format!("trial log is missing column '{name}'")))?;
    }
    let mut event_cols = Vec::new();
    for label in EVENT_LABELS {
        for axis in ["t", "x", "y", "z"] {
            event_cols.push(find(&format!("{axis}_{label}")));
        }
    }
    let present = event_cols.iter().filter(|c| c.is_some()).count();
    if present != 0 && present != event_cols.len() {
        return Err(Error::domain("trial log has only some event-coordinate columns"));
    }
    let event_cols: Option<Vec<usize>> = event_cols.into_iter().collect();

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i as u64 + 2;
        let field = |c: usize| row.get(c).ok_or_else(|| bad(line, "short row"));
        let index: u64 = field(base[0])?
            .trim()
            .parse()
            .map_err(|_| bad(line, "trial index is not a nonnegative integer"))?;
        let events = match &event_cols {
            Some(cols) => {
                let mut coords = [[0.0; 4]; 5];
                for (k, &c) in cols.iter().enumerate() {
                    let v: f64 = field(c)?.trim().parse().map_err(|_| bad(line, "bad coordinate"))?;
                    if !v.is_finite() {
                        return Err(bad(line, "non-finite coordinate"));
                    }
                    coords[k / 4][k % 4] = v;
                }
                Some(Box::new(coords))
            }
            None => None,
        };
        records.push(TrialRecord {
            index,
            setting_a: parse_setting(field(base[1])?, line)?,
            setting_b: parse_setting(field(base[2])?, line)?,
            outcome_a: parse_outcome(field(base[3])?, line)?,
            outcome_b: parse_outcome(field(base[4])?, line)?,
            heralded: parse_bool(field(base[5])?, line)?,
            events,
        });
    }
    Ok(TrialLog {
        records,
        ..TrialLog::default()
    })
}

pub fn read_csv_path(path: &Path) -> Result<TrialLog> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file))
}
