//! Beta-Binomial smoothed behavioral rate features over lookback windows.
//!
//! For a (query, product) pair the rate feature is the posterior mean
//! `(Σb + α) / (Σe + α + β)` where the sums run over the days of the
//! lookback window. Rates are computed per source and per behavior
//! (click, add-to-cart, order), and feature vectors carry one-hot
//! query-vertical indicators alongside.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::{EngagementEvent, Source, VerticalLabelMap};

/// A lookback window: the `length_days` calendar days ending at
/// `reference_date`, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length_days: u32,
    pub reference_date: NaiveDate,
}

impl WindowSpec {
    pub fn new(length_days: u32, reference_date: NaiveDate) -> WindowSpec {
        assert!(length_days >= 1, "window length must be >= 1");
        WindowSpec {
            length_days,
            reference_date,
        }
    }

    /// Earliest day inside the window.
    pub fn start_date(&self) -> NaiveDate {
        self.reference_date - Days::new(self.length_days as u64 - 1)
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        day >= self.start_date() && day <= self.reference_date
    }
}

/// Beta prior parameters (α, β), both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub alpha: f64,
    pub beta: f64,
}

impl PriorSpec {
    pub fn new(alpha: f64, beta: f64) -> Result<PriorSpec> {
        if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
            Ok(PriorSpec { alpha, beta })
        } else {
            Err(Error::InvalidParam(format!(
                "Beta prior requires alpha > 0 and beta > 0, got ({alpha}, {beta})"
            )))
        }
    }

    /// The cold-start value α/(α+β).
    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

/// Behavior types carried per event: cr = click rate, ar = ATC rate,
/// or = order rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    Cr,
    Ar,
    Or,
}

impl Behavior {
    pub const ALL: [Behavior; 3] = [Behavior::Cr, Behavior::Ar, Behavior::Or];

    pub fn name(self) -> &'static str {
        match self {
            Behavior::Cr => "cr",
            Behavior::Ar => "ar",
            Behavior::Or => "or",
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-behavior Beta priors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub cr: PriorSpec,
    pub ar: PriorSpec,
    pub or: PriorSpec,
}

impl PriorConfig {
    pub fn get(&self, behavior: Behavior) -> PriorSpec {
        match behavior {
            Behavior::Cr => self.cr,
            Behavior::Ar => self.ar,
            Behavior::Or => self.or,
        }
    }
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            cr: PriorSpec {
                alpha: 1.0,
                beta: 19.0,
            },
            ar: PriorSpec {
                alpha: 1.0,
                beta: 49.0,
            },
            or: PriorSpec {
                alpha: 1.0,
                beta: 99.0,
            },
        }
    }
}

/// Identifies one behavioral feature column; rendered as
/// `<source>_<window_days>_<behavior>`, e.g. `web_730_cr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureKey {
    pub source: Source,
    pub window_days: u32,
    pub behavior: Behavior,
}

impl FeatureKey {
    pub fn render(&self) -> String {
        format!("{}_{}_{}", self.source, self.window_days, self.behavior)
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

// Ordered by rendered name so exports are stable.
impl Ord for FeatureKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.render().cmp(&other.render())
    }
}

impl PartialOrd for FeatureKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Windowed count sums for one (query, product, source) key.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub examines: u64,
    pub clicks: u64,
    pub atcs: u64,
    pub orders: u64,
}

impl Counts {
    pub fn add_event(&mut self, ev: &EngagementEvent) {
        self.examines += ev.examines;
        self.clicks += ev.clicks;
        self.atcs += ev.atcs;
        self.orders += ev.orders;
    }

    fn add(&mut self, other: &Counts) {
        self.examines += other.examines;
        self.clicks += other.clicks;
        self.atcs += other.atcs;
        self.orders += other.orders;
    }

    fn sub(&mut self, other: &Counts) {
        self.examines -= other.examines;
        self.clicks -= other.clicks;
        self.atcs -= other.atcs;
        self.orders -= other.orders;
    }

    pub fn behavior_count(&self, behavior: Behavior) -> u64 {
        match behavior {
            Behavior::Cr => self.clicks,
            Behavior::Ar => self.atcs,
            Behavior::Or => self.orders,
        }
    }
}

pub type AggregateKey = (String, String, Source);

/// Full feature vector for one (query, product) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub query_id: String,
    pub product_id: String,
    pub behavioral: BTreeMap<FeatureKey, f64>,
    /// Indicators ordered (Food, Consumables, Home, Hardlines, Fashion, ETS).
    pub vertical_onehot: [u8; 6],
}

/// Posterior-mean rate `(b_sum + α) / (e_sum + α + β)`.
pub fn smoothed_rate(b_sum: u64, e_sum: u64, prior: PriorSpec) -> Result<f64> {
    if b_sum > e_sum {
        return Err(Error::CountExceedsExamines {
            behavior: "behavior".to_string(),
            b_sum,
            e_sum,
        });
    }
    Ok((b_sum as f64 + prior.alpha) / (e_sum as f64 + prior.alpha + prior.beta))
}

/// Exact integer count sums per (query, product, source) over the window.
/// Keys with no events inside the window are absent.
pub fn aggregate_counts(
    events: &[EngagementEvent],
    window: &WindowSpec,
) -> BTreeMap<AggregateKey, Counts> {
    let mut out: BTreeMap<AggregateKey, Counts> = BTreeMap::new();
    for ev in events {
        if window.contains(ev.day) {
            out.entry((ev.query_id.clone(), ev.product_id.clone(), ev.source))
                .or_default()
                .add_event(ev);
        }
    }
    out
}

/// Assemble feature vectors for every (query, product) pair in `universe`.
///
/// All windows must share one reference date. Pairs with no events in a
/// given window fall back to the prior mean for that window's features.
pub fn build_feature_matrix(
    events: &[EngagementEvent],
    windows: &[WindowSpec],
    priors: &PriorConfig,
    labels: &VerticalLabelMap,
    universe: &[(String, String)],
) -> Result<Vec<FeatureVector>> {
    if windows.is_empty() {
        return Err(Error::InvalidParam("at least one window required".into()));
    }
    let reference = windows[0].reference_date;
    if windows.iter().any(|w| w.reference_date != reference) {
        return Err(Error::InvalidParam(
            "all windows must share one reference date".into(),
        ));
    }

    let aggregates: Vec<BTreeMap<AggregateKey, Counts>> = windows
        .iter()
        .map(|w| aggregate_counts(events, w))
        .collect();

    let mut out = Vec::with_capacity(universe.len());
    for (query_id, product_id) in universe {
        let vertical = labels.get(query_id)?;
        let mut onehot = [0u8; 6];
        onehot[vertical.index()] = 1;

        let mut behavioral = BTreeMap::new();
        for (window, agg) in windows.iter().zip(&aggregates) {
            for source in Source::ALL {
                let counts = agg
                    .get(&(query_id.clone(), product_id.clone(), source))
                    .copied()
                    .unwrap_or_default();
                for behavior in Behavior::ALL {
                    let key = FeatureKey {
                        source,
                        window_days: window.length_days,
                        behavior,
                    };
                    let rate = smoothed_rate(
                        counts.behavior_count(behavior),
                        counts.examines,
                        priors.get(behavior),
                    )?;
                    behavioral.insert(key, rate);
                }
            }
        }
        out.push(FeatureVector {
            query_id: query_id.clone(),
            product_id: product_id.clone(),
            behavioral,
            vertical_onehot: onehot,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct DayCell {
    present: bool,
    counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct KeyState {
    /// One cell per window day, oldest first; length always `length_days`.
    ring: VecDeque<DayCell>,
    sums: Counts,
    present_days: u32,
}

/// Incrementally maintained windowed sums per (query, product, source).
///
/// Running sums equal the ring buffer contents at all times; advancing by
/// one day evicts the oldest day and admits the new one, so the state is
/// always bit-identical to a fresh [`aggregate_counts`] over the same
/// window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RollingAggregate {
    length_days: u32,
    reference_date: NaiveDate,
    per_key: BTreeMap<AggregateKey, KeyState>,
}

impl RollingAggregate {
    /// Build from scratch over `window`.
    pub fn new(events: &[EngagementEvent], window: &WindowSpec) -> RollingAggregate {
        let mut agg = RollingAggregate {
            length_days: window.length_days,
            reference_date: window.reference_date,
            per_key: BTreeMap::new(),
        };
        let start = window.start_date();
        for ev in events {
            if !window.contains(ev.day) {
                continue;
            }
            let offset = (ev.day - start).num_days() as usize;
            let state = agg
                .per_key
                .entry((ev.query_id.clone(), ev.product_id.clone(), ev.source))
                .or_insert_with(|| KeyState {
                    ring: VecDeque::from(vec![DayCell::default(); window.length_days as usize]),
                    sums: Counts::default(),
                    present_days: 0,
                });
            let cell = &mut state.ring[offset];
            if !cell.present {
                cell.present = true;
                state.present_days += 1;
            }
            cell.counts.add_event(ev);
            state.sums.add_event(ev);
        }
        agg
    }

    pub fn window(&self) -> WindowSpec {
        WindowSpec::new(self.length_days, self.reference_date)
    }

    /// Current sums, matching `aggregate_counts` over the current window.
    pub fn sums(&self) -> BTreeMap<AggregateKey, Counts> {
        self.per_key
            .iter()
            .filter(|(_, s)| s.present_days > 0)
            .map(|(k, s)| (k.clone(), s.sums))
            .collect()
    }

    /// Slide the window forward by one day. `new_day_events` must all be
    /// dated exactly `reference_date + 1`.
    pub fn advance_day(&mut self, new_day_events: &[EngagementEvent]) -> Result<()> {
        let new_day = self.reference_date + Days::new(1);
        if let Some(bad) = new_day_events.iter().find(|ev| ev.day != new_day) {
            return Err(Error::WrongDay {
                got: bad.day,
                expected: new_day,
            });
        }

        // Merge the new day per key first so each key rotates exactly once.
        let mut incoming: BTreeMap<AggregateKey, Counts> = BTreeMap::new();
        for ev in new_day_events {
            incoming
                .entry((ev.query_id.clone(), ev.product_id.clone(), ev.source))
                .or_default()
                .add_event(ev);
        }
        for key in incoming.keys() {
            self.per_key.entry(key.clone()).or_insert_with(|| KeyState {
                ring: VecDeque::from(vec![DayCell::default(); self.length_days as usize]),
                sums: Counts::default(),
                present_days: 0,
            });
        }

        // Every key loses its oldest day; keys with new events fill the
        // freshly admitted cell.
        for (key, state) in self.per_key.iter_mut() {
            state.rotate();
            if let Some(counts) = incoming.remove(key) {
                let cell = state.ring.back_mut().unwrap();
                cell.present = true;
                cell.counts = counts;
                state.present_days += 1;
                state.sums.add(&counts);
            }
        }
        self.per_key.retain(|_, s| s.present_days > 0);
        self.reference_date = new_day;
        Ok(())
    }
}

impl KeyState {
    fn rotate(&mut self) {
        let evicted = self.ring.pop_front().unwrap();
        if evicted.present {
            self.present_days -= 1;
            self.sums.sub(&evicted.counts);
        }
        self.ring.push_back(DayCell::default());
    }
}
