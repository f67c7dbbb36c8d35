//! Ingestion and indexing of daily (query, product)-level engagement logs.
//!
//! Events arrive as JSONL, one object per line:
//! `{"q": ..., "p": ..., "src": "web"|"app", "day": "YYYY-MM-DD",
//!   "examines": n, "clicks": n, "atcs": n, "orders": n}`.
//! Duplicate (query, product, source, day) lines are merged by summation,
//! then behavior counts are capped at the examine count.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::WindowSpec;

/// Traffic source of an engagement record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Web,
    App,
}

impl Source {
    pub const ALL: [Source; 2] = [Source::Web, Source::App];
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Web => write!(f, "web"),
            Source::App => write!(f, "app"),
        }
    }
}

/// Business vertical a query belongs to. ETS = Electronics, Toys, Seasonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Vertical {
    Food,
    Consumables,
    Home,
    Hardlines,
    Fashion,
    ETS,
}

impl Vertical {
    pub const ALL: [Vertical; 6] = [
        Vertical::Food,
        Vertical::Consumables,
        Vertical::Home,
        Vertical::Hardlines,
        Vertical::Fashion,
        Vertical::ETS,
    ];

    /// Position in the canonical one-hot ordering.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|v| *v == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Vertical::Food => "Food",
            Vertical::Consumables => "Consumables",
            Vertical::Home => "Home",
            Vertical::Hardlines => "Hardlines",
            Vertical::Fashion => "Fashion",
            Vertical::ETS => "ETS",
        }
    }

    pub fn parse(s: &str) -> Option<Vertical> {
        Self::ALL.iter().copied().find(|v| v.name() == s)
    }

    /// Stable verticals in the standard scenario are Food and Consumables;
    /// the other four form General Merchandise.
    pub fn is_general_merchandise(self) -> bool {
        !matches!(self, Vertical::Food | Vertical::Consumables)
    }
}

impl fmt::Display for Vertical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One day's engagement counts for a (query, product, source) triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngagementEvent {
    #[serde(rename = "q")]
    pub query_id: String,
    #[serde(rename = "p")]
    pub product_id: String,
    #[serde(rename = "src")]
    pub source: Source,
    pub day: NaiveDate,
    pub examines: u64,
    pub clicks: u64,
    pub atcs: u64,
    pub orders: u64,
}

/// Outcome of parsing one event stream: rejected lines and clamped counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    /// (1-based line number, reason) for each rejected line.
    pub rejected: Vec<(usize, String)>,
    /// Human-readable warnings for merged records whose behavior counts
    /// exceeded examines and were capped.
    pub clamped: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.rejected.is_empty() && self.clamped.is_empty()
    }
}

type EventKey = (String, String, Source, NaiveDate);

/// Parse a JSONL event stream, merging duplicates and validating counts.
///
/// In non-strict mode malformed lines are rejected per line and behavior
/// counts exceeding examines are clamped with a warning. In strict mode any
/// violation aborts with an error.
pub fn parse_event_log(
    stream: impl BufRead,
    strict: bool,
) -> Result<(Vec<EngagementEvent>, ValidationReport)> {
    let mut merged: BTreeMap<EventKey, EngagementEvent> = BTreeMap::new();
    let mut report = ValidationReport::default();

    for (idx, line) in stream.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: EngagementEvent = match serde_json::from_str(&line) {
            Ok(ev) => ev,
            Err(e) => {
                if strict {
                    return Err(Error::ParseLine {
                        line: line_no,
                        reason: e.to_string(),
                    });
                }
                report.rejected.push((line_no, e.to_string()));
                continue;
            }
        };
        let key = (
            ev.query_id.clone(),
            ev.product_id.clone(),
            ev.source,
            ev.day,
        );
        merged
            .entry(key)
            .and_modify(|acc| {
                acc.examines += ev.examines;
                acc.clicks += ev.clicks;
                acc.atcs += ev.atcs;
                acc.orders += ev.orders;
            })
            .or_insert(ev);
    }

    // Cap check runs after duplicate merging.
    let mut events = Vec::with_capacity(merged.len());
    for (_, mut ev) in merged {
        for (name, count) in [
            ("clicks", ev.clicks),
            ("atcs", ev.atcs),
            ("orders", ev.orders),
        ] {
            if count > ev.examines {
                if strict {
                    return Err(Error::CountExceedsExamines {
                        behavior: name.to_string(),
                        b_sum: count,
                        e_sum: ev.examines,
                    });
                }
                report.clamped.push(format!(
                    "({}, {}, {}, {}): {} {} clamped to examines {}",
                    ev.query_id, ev.product_id, ev.source, ev.day, name, count, ev.examines
                ));
            }
        }
        ev.clicks = ev.clicks.min(ev.examines);
        ev.atcs = ev.atcs.min(ev.examines);
        ev.orders = ev.orders.min(ev.examines);
        events.push(ev);
    }
    // BTreeMap iteration already yields (q, p, src, day) order.
    Ok((events, report))
}

/// Serialize events in the JSONL schema, one object per line.
pub fn write_events(events: &[EngagementEvent], mut out: impl std::io::Write) -> Result<()> {
    for ev in events {
        serde_json::to_writer(&mut out, ev)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Events whose day lies in the window's inclusive date interval.
pub fn slice_window(events: &[EngagementEvent], window: &WindowSpec) -> Vec<EngagementEvent> {
    let start = window.start_date();
    let end = window.reference_date;
    events
        .iter()
        .filter(|ev| ev.day >= start && ev.day <= end)
        .cloned()
        .collect()
}

/// Query → vertical assignments used for one-hot vertical features.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerticalLabelMap {
    pub entries: BTreeMap<String, Vertical>,
}

impl VerticalLabelMap {
    pub fn get(&self, query_id: &str) -> Result<Vertical> {
        self.entries
            .get(query_id)
            .copied()
            .ok_or_else(|| Error::UnlabeledQuery(query_id.to_string()))
    }

    /// Parse the label file: CSV with header `query_id,vertical`.
    pub fn from_csv(stream: impl BufRead) -> Result<VerticalLabelMap> {
        let mut entries = BTreeMap::new();
        for (idx, line) in stream.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (line_no == 1 && line == "query_id,vertical") {
                continue;
            }
            let (q, v) = line.split_once(',').ok_or_else(|| Error::ParseLine {
                line: line_no,
                reason: "expected `query_id,vertical`".to_string(),
            })?;
            let vertical = Vertical::parse(v.trim()).ok_or_else(|| Error::ParseLine {
                line: line_no,
                reason: format!("unknown vertical `{v}`"),
            })?;
            entries.insert(q.trim().to_string(), vertical);
        }
        Ok(VerticalLabelMap { entries })
    }

    pub fn to_csv(&self, mut out: impl std::io::Write) -> Result<()> {
        writeln!(out, "query_id,vertical")?;
        for (q, v) in &self.entries {
            writeln!(out, "{q},{v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn line(q: &str, p: &str, src: &str, day: &str, e: u64, c: u64, a: u64, o: u64) -> String {
        format!(
            r#"{{"q":"{q}","p":"{p}","src":"{src}","day":"{day}","examines":{e},"clicks":{c},"atcs":{a},"orders":{o}}}"#
        )
    }

    #[test]
    fn duplicate_lines_merge_by_summation() {
        let input = [
            line("q1", "p1", "web", "2023-12-01", 3, 1, 0, 0),
            line("q1", "p1", "web", "2023-12-01", 4, 2, 0, 0),
        ]
        .join("\n");
        let (events, report) = parse_event_log(Cursor::new(input), false).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].clicks, 3);
        assert_eq!(events[0].examines, 7);
        assert!(report.is_clean());
    }

    #[test]
    fn clamp_in_non_strict_mode() {
        let input = line("q1", "p1", "web", "2023-12-01", 3, 5, 0, 0);
        let (events, report) = parse_event_log(Cursor::new(input), false).unwrap();
        assert_eq!(events[0].clicks, 3);
        assert_eq!(report.clamped.len(), 1);
    }

    #[test]
    fn clamp_is_fatal_in_strict_mode() {
        let input = line("q1", "p1", "web", "2023-12-01", 3, 5, 0, 0);
        assert!(parse_event_log(Cursor::new(input), true).is_err());
    }

    #[test]
    fn empty_stream_is_empty() {
        let (events, report) = parse_event_log(Cursor::new(""), false).unwrap();
        assert!(events.is_empty());
        assert!(report.is_clean());
    }

    #[test]
    fn malformed_lines_rejected_non_strict() {
        let input = [
            line("q1", "p1", "web", "2023-12-01", 3, 1, 0, 0),
            r#"{"q":"q2","p":"p1","src":"phone","day":"2023-12-01","examines":1,"clicks":0,"atcs":0,"orders":0}"#.to_string(),
            r#"{"q":"q3","p":"p1","src":"web","day":"not-a-date","examines":1,"clicks":0,"atcs":0,"orders":0}"#.to_string(),
            r#"{"q":"q4","p":"p1","src":"web","day":"2023-12-01","examines":-1,"clicks":0,"atcs":0,"orders":0}"#.to_string(),
        ]
        .join("\n");
        let (events, report) = parse_event_log(Cursor::new(input), false).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(report.rejected.len(), 3);
        assert_eq!(report.rejected[0].0, 2);
    }

    #[test]
    fn output_sorted_by_key() {
        let input = [
            line("q2", "p1", "web", "2023-12-01", 1, 0, 0, 0),
            line("q1", "p2", "app", "2023-12-02", 1, 0, 0, 0),
            line("q1", "p2", "app", "2023-12-01", 1, 0, 0, 0),
            line("q1", "p1", "web", "2023-12-01", 1, 0, 0, 0),
        ]
        .join("\n");
        let (events, _) = parse_event_log(Cursor::new(input), false).unwrap();
        let keys: Vec<_> = events
            .iter()
            .map(|e| (e.query_id.clone(), e.product_id.clone(), e.source, e.day))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn parse_roundtrip_is_identity() {
        let input = [
            line("q1", "p1", "web", "2023-12-01", 3, 1, 1, 0),
            line("q1", "p1", "app", "2023-12-02", 9, 4, 2, 1),
            line("q2", "p3", "web", "2023-11-05", 2, 0, 0, 0),
        ]
        .join("\n");
        let (events, _) = parse_event_log(Cursor::new(input), false).unwrap();
        let mut buf = Vec::new();
        write_events(&events, &mut buf).unwrap();
        let (reparsed, report) = parse_event_log(Cursor::new(buf), true).unwrap();
        assert!(report.is_clean());
        assert_eq!(events, reparsed);
    }

    #[test]
    fn slice_window_inclusive_bounds() {
        let mk = |day: &str| EngagementEvent {
            query_id: "q".into(),
            product_id: "p".into(),
            source: Source::Web,
            day: d(day),
            examines: 1,
            clicks: 0,
            atcs: 0,
            orders: 0,
        };
        let events = vec![mk("2023-11-01"), mk("2023-12-01"), mk("2023-12-15")];

        let w30 = WindowSpec::new(30, d("2023-12-30"));
        let got = slice_window(&events, &w30);
        assert_eq!(
            got.iter().map(|e| e.day).collect::<Vec<_>>(),
            vec![d("2023-12-01"), d("2023-12-15")]
        );

        let w730 = WindowSpec::new(730, d("2023-12-30"));
        assert_eq!(slice_window(&events, &w730).len(), 3);

        let w1 = WindowSpec::new(1, d("2023-11-01"));
        let got = slice_window(&events, &w1);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].day, d("2023-11-01"));
    }

    #[test]
    fn vertical_labels_csv_roundtrip() {
        let csv = "query_id,vertical\nq1,Food\nq2,Fashion\nq3,ETS\n";
        let map = VerticalLabelMap::from_csv(Cursor::new(csv)).unwrap();
        assert_eq!(map.get("q2").unwrap(), Vertical::Fashion);
        assert!(map.get("q9").is_err());
        let mut buf = Vec::new();
        map.to_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), csv);
    }

    #[test]
    fn vertical_enum_has_six_members_in_order() {
        assert_eq!(Vertical::ALL.len(), 6);
        assert_eq!(Vertical::Fashion.index(), 4);
        assert_eq!(Vertical::Food.index(), 0);
    }
}
