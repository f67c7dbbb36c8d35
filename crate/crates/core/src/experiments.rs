//! Interleaving and A/B experiments over simulated traffic.
//!
//! Four model variants are compared: the Baseline uses only long-window
//! (730-day) behavioral features, Model A only short-window (30-day),
//! Model B both, and Model C both plus one-hot query-vertical signals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::ops::Range;

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::{EngagementEvent, Source, Vertical, VerticalLabelMap};
use crate::features::{build_feature_matrix, FeatureVector, PriorConfig, WindowSpec};
use crate::ltr::{train, DataRow, GBDTModel, QueryGroup, RankingDataset, TrainParams};
use crate::simulator::{derive_rng, simulate_session, World};
use crate::stats::paired_credit_z;
use crate::tree_analysis::{child_feature_distribution, NodeAdjacencyReport};

pub const SHORT_WINDOW_DAYS: u32 = 30;
pub const LONG_WINDOW_DAYS: u32 = 730;

/// The four ranking model variants under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelVariant {
    Baseline,
    ModelA,
    ModelB,
    ModelC,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::Baseline,
        ModelVariant::ModelA,
        ModelVariant::ModelB,
        ModelVariant::ModelC,
    ];

    pub fn windows(self) -> &'static [u32] {
        match self {
            ModelVariant::Baseline => &[LONG_WINDOW_DAYS],
            ModelVariant::ModelA => &[SHORT_WINDOW_DAYS],
            ModelVariant::ModelB | ModelVariant::ModelC => {
                &[LONG_WINDOW_DAYS, SHORT_WINDOW_DAYS]
            }
        }
    }

    pub fn include_verticals(self) -> bool {
        matches!(self, ModelVariant::ModelC)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Baseline => "Baseline",
            ModelVariant::ModelA => "ModelA",
            ModelVariant::ModelB => "ModelB",
            ModelVariant::ModelC => "ModelC",
        }
    }

    pub fn parse(s: &str) -> Option<ModelVariant> {
        Self::ALL.iter().copied().find(|v| v.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Vertical one-hot column name.
pub fn vertical_feature_name(vertical: Vertical) -> String {
    format!("vertical_{}", vertical.name())
}

/// Sorted feature-name list for a variant.
pub fn variant_feature_names(variant: ModelVariant) -> Vec<String> {
    let mut names = Vec::new();
    for &window in variant.windows() {
        for source in Source::ALL {
            for behavior in crate::features::Behavior::ALL {
                names.push(format!("{source}_{window}_{behavior}"));
            }
        }
    }
    if variant.include_verticals() {
        for vertical in Vertical::ALL {
            names.push(vertical_feature_name(vertical));
        }
    }
    names.sort();
    names
}

/// Dense vector for one feature vector, in the given (sorted) name order.
fn to_dense(fv: &FeatureVector, names: &[String]) -> Vec<f64> {
    let mut by_name: BTreeMap<String, f64> = fv
        .behavioral
        .iter()
        .map(|(k, v)| (k.render(), *v))
        .collect();
    for (i, vertical) in Vertical::ALL.iter().enumerate() {
        by_name.insert(
            vertical_feature_name(*vertical),
            fv.vertical_onehot[i] as f64,
        );
    }
    names.iter().map(|n| by_name[n]).collect()
}

/// Relevance grade from realized engagement in the label window:
/// order → 3, ATC → 2, click → 1, otherwise 0.
fn grade_outcomes(
    events: &[EngagementEvent],
    label_window: (NaiveDate, NaiveDate),
) -> BTreeMap<(String, String), u8> {
    let mut grades: BTreeMap<(String, String), u8> = BTreeMap::new();
    for ev in events {
        if ev.day < label_window.0 || ev.day > label_window.1 {
            continue;
        }
        let grade = if ev.orders > 0 {
            3
        } else if ev.atcs > 0 {
            2
        } else if ev.clicks > 0 {
            1
        } else {
            0
        };
        let entry = grades
            .entry((ev.query_id.clone(), ev.product_id.clone()))
            .or_insert(0);
        *entry = (*entry).max(grade);
    }
    grades
}

/// Build the training dataset for one variant and one temporal snapshot.
///
/// Features aggregate events up to `reference_date`; grades come from
/// engagement inside `label_window` (inclusive). The label window must lie
/// strictly after the reference date. Queries with fewer than two universe
/// entries are dropped.
pub fn assemble_variant_dataset(
    events: &[EngagementEvent],
    labels: &VerticalLabelMap,
    variant: ModelVariant,
    reference_date: NaiveDate,
    label_window: (NaiveDate, NaiveDate),
    universe: &[(String, String)],
    priors: &PriorConfig,
) -> Result<RankingDataset> {
    if label_window.0 <= reference_date {
        return Err(Error::LabelLeakage {
            feature_end: reference_date,
            label_start: label_window.0,
            label_end: label_window.1,
        });
    }
    let windows: Vec<WindowSpec> = variant
        .windows()
        .iter()
        .map(|&len| WindowSpec::new(len, reference_date))
        .collect();
    let matrix = build_feature_matrix(events, &windows, priors, labels, universe)?;
    let grades = grade_outcomes(events, label_window);
    let feature_names = variant_feature_names(variant);

    let mut groups: Vec<QueryGroup> = Vec::new();
    for fv in &matrix {
        let row = DataRow {
            product_id: fv.product_id.clone(),
            features: to_dense(fv, &feature_names),
            grade: grades
                .get(&(fv.query_id.clone(), fv.product_id.clone()))
                .copied()
                .unwrap_or(0),
        };
        match groups.last_mut() {
            Some(g) if g.query_id == fv.query_id => g.rows.push(row),
            _ => groups.push(QueryGroup {
                query_id: fv.query_id.clone(),
                rows: vec![row],
            }),
        }
    }
    groups.retain(|g| g.rows.len() >= 2);
    Ok(RankingDataset {
        groups,
        feature_names,
    })
}

/// Credit assignment for interleaving sessions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CreditRule {
    /// A team is credited only when its drafted items got engagement and the
    /// other team's did not; ties count toward neither numerator.
    TeamExclusive,
    /// Both teams are credited when both got engagement.
    PerArm,
}

impl fmt::Display for CreditRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CreditRule::TeamExclusive => write!(f, "team-exclusive"),
            CreditRule::PerArm => write!(f, "per-arm"),
        }
    }
}

/// Which team drafted a given position of a merged ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Team {
    Control,
    Variant,
}

/// Team-draft interleaving. Per round a fair coin picks the drafting order;
/// each team drafts its highest-ranked not-yet-placed item.
pub fn team_draft_interleave<T: Clone + Ord>(
    ranking_control: &[T],
    ranking_variant: &[T],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<T>, Vec<Team>)> {
    let mut set_a: Vec<&T> = ranking_control.iter().collect();
    let mut set_b: Vec<&T> = ranking_variant.iter().collect();
    set_a.sort();
    set_b.sort();
    if set_a != set_b {
        return Err(Error::CandidateMismatch);
    }

    let n = ranking_control.len();
    let mut merged = Vec::with_capacity(n);
    let mut teams = Vec::with_capacity(n);
    let mut placed: BTreeSet<&T> = BTreeSet::new();
    let mut ptr_control = 0usize;
    let mut ptr_variant = 0usize;

    while merged.len() < n {
        let control_first = rng.random_bool(0.5);
        let order = if control_first {
            [Team::Control, Team::Variant]
        } else {
            [Team::Variant, Team::Control]
        };
        for team in order {
            if merged.len() == n {
                break;
            }
            let (ranking, ptr) = match team {
                Team::Control => (ranking_control, &mut ptr_control),
                Team::Variant => (ranking_variant, &mut ptr_variant),
            };
            while placed.contains(&ranking[*ptr]) {
                *ptr += 1;
            }
            placed.insert(&ranking[*ptr]);
            merged.push(ranking[*ptr].clone());
            teams.push(team);
        }
    }
    Ok((merged, teams))
}

/// One segment row of an interleaving report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleavingRow {
    /// Vertical name or "Overall".
    pub segment: String,
    pub sessions: u64,
    pub control_credits: u64,
    pub variant_credits: u64,
    /// Relative change of the variant-credited share vs. control.
    pub delta: f64,
    pub z: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Per-vertical and overall engagement deltas with significance flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleavingReport {
    pub credit_rule: CreditRule,
    pub alpha: f64,
    pub rows: Vec<InterleavingRow>,
}

impl InterleavingReport {
    pub fn row(&self, segment: &str) -> Option<&InterleavingRow> {
        self.rows.iter().find(|r| r.segment == segment)
    }

    pub fn overall(&self) -> &InterleavingRow {
        self.row("Overall").expect("report always has Overall")
    }

    /// CSV export: `vertical,delta,significant,n`.
    pub fn to_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "vertical,delta,significant,n")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                row.segment, row.delta, row.significant, row.sessions
            )?;
        }
        Ok(())
    }
}

/// Shared inputs for one simulated online test.
pub struct TestSetup<'a> {
    pub world: &'a World,
    /// Event log collected before the test; features are built from it.
    pub history: &'a [EngagementEvent],
    pub priors: &'a PriorConfig,
    pub test_days: Range<u32>,
    /// Sessions per day per query per source.
    pub sessions_per_day: u32,
    pub credit_rule: CreditRule,
    pub seed: u64,
}

/// Static per-query scores for one model, computed from features at the
/// reference date just before the test window.
fn score_queries(
    model: &GBDTModel,
    setup: &TestSetup,
    candidates_by_query: &[Vec<usize>],
) -> Result<Vec<Vec<(usize, f64)>>> {
    let world = setup.world;
    let reference_day = setup.test_days.start.checked_sub(1).ok_or_else(|| {
        Error::Experiment("test window cannot start at day 0".into())
    })?;
    let reference_date = world.config.date_of(reference_day);
    let labels = world.vertical_labels();

    // Superset features (both windows + verticals); each model picks its
    // own columns by name.
    let windows = [
        WindowSpec::new(LONG_WINDOW_DAYS, reference_date),
        WindowSpec::new(SHORT_WINDOW_DAYS, reference_date),
    ];
    let mut universe = Vec::new();
    for (q_idx, query) in world.queries.iter().enumerate() {
        for &p in &candidates_by_query[q_idx] {
            universe.push((query.query_id.clone(), query.products[p].product_id.clone()));
        }
    }
    let matrix = build_feature_matrix(setup.history, &windows, setup.priors, &labels, &universe)?;
    let mut by_pair: BTreeMap<(String, String), &FeatureVector> = BTreeMap::new();
    for fv in &matrix {
        by_pair.insert((fv.query_id.clone(), fv.product_id.clone()), fv);
    }

    let mut out = Vec::with_capacity(world.queries.len());
    for (q_idx, query) in world.queries.iter().enumerate() {
        let mut scored = Vec::with_capacity(candidates_by_query[q_idx].len());
        for &p in &candidates_by_query[q_idx] {
            let fv = by_pair[&(query.query_id.clone(), query.products[p].product_id.clone())];
            let dense = to_dense(fv, &model.feature_names);
            scored.push((p, model.predict(&dense)?));
        }
        out.push(scored);
    }
    Ok(out)
}

fn ranking_from_scores(scored: &[(usize, f64)]) -> Vec<usize> {
    let mut order = scored.to_vec();
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    order.into_iter().map(|(p, _)| p).collect()
}

struct SegmentCounter {
    sessions: u64,
    control: u64,
    variant: u64,
}

/// Run one interleaving test: both models rank each query's candidates,
/// team-draft merges, the user model generates outcomes, and engagement
/// credit flows to the drafting team per the credit rule.
pub fn run_interleaving_test(
    control: &GBDTModel,
    variant: &GBDTModel,
    setup: &TestSetup,
) -> Result<InterleavingReport> {
    if setup.test_days.is_empty() || setup.sessions_per_day == 0 {
        return Err(Error::Experiment("zero test sessions".into()));
    }
    let world = setup.world;
    let reference_day = setup.test_days.start - 1;
    let candidates_by_query: Vec<Vec<usize>> = world
        .queries
        .iter()
        .map(|q| q.catalog_at(reference_day))
        .collect();

    let control_scores = score_queries(control, setup, &candidates_by_query)?;
    let variant_scores = score_queries(variant, setup, &candidates_by_query)?;

    let mut counters: BTreeMap<String, SegmentCounter> = BTreeMap::new();
    for vertical in Vertical::ALL {
        counters.insert(
            vertical.name().to_string(),
            SegmentCounter {
                sessions: 0,
                control: 0,
                variant: 0,
            },
        );
    }

    for day in setup.test_days.clone() {
        for (q_idx, query) in world.queries.iter().enumerate() {
            if candidates_by_query[q_idx].len() < 2 {
                continue;
            }
            let ranking_control = ranking_from_scores(&control_scores[q_idx]);
            let ranking_variant = ranking_from_scores(&variant_scores[q_idx]);
            for source in Source::ALL {
                let mut rng = derive_rng(
                    setup.seed,
                    &[3, q_idx as u64, day as u64, source as u64],
                );
                for _ in 0..setup.sessions_per_day {
                    let (merged, teams) =
                        team_draft_interleave(&ranking_control, &ranking_variant, &mut rng)?;
                    let session = simulate_session(
                        query,
                        &merged,
                        day,
                        source,
                        world.config.page_length,
                        &mut rng,
                    );
                    let mut control_engaged = false;
                    let mut variant_engaged = false;
                    for (pos, team) in session.positions.iter().zip(&teams) {
                        if pos.clicked {
                            match team {
                                Team::Control => control_engaged = true,
                                Team::Variant => variant_engaged = true,
                            }
                        }
                    }
                    let counter = counters.get_mut(query.vertical.name()).unwrap();
                    counter.sessions += 1;
                    match setup.credit_rule {
                        CreditRule::TeamExclusive => {
                            if control_engaged && !variant_engaged {
                                counter.control += 1;
                            } else if variant_engaged && !control_engaged {
                                counter.variant += 1;
                            }
                        }
                        CreditRule::PerArm => {
                            counter.control += control_engaged as u64;
                            counter.variant += variant_engaged as u64;
                        }
                    }
                }
            }
        }
    }

    let alpha = 0.10;
    let mut rows = Vec::new();
    let mut total = SegmentCounter {
        sessions: 0,
        control: 0,
        variant: 0,
    };
    for vertical in Vertical::ALL {
        let c = &counters[vertical.name()];
        total.sessions += c.sessions;
        total.control += c.control;
        total.variant += c.variant;
        rows.push(make_row(vertical.name(), c, alpha));
    }
    rows.push(make_row("Overall", &total, alpha));

    Ok(InterleavingReport {
        credit_rule: setup.credit_rule,
        alpha,
        rows,
    })
}

fn make_row(segment: &str, c: &SegmentCounter, alpha: f64) -> InterleavingRow {
    let control_share = if c.sessions > 0 {
        c.control as f64 / c.sessions as f64
    } else {
        0.0
    };
    let variant_share = if c.sessions > 0 {
        c.variant as f64 / c.sessions as f64
    } else {
        0.0
    };
    let delta = if control_share > 0.0 {
        (variant_share - control_share) / control_share
    } else {
        0.0
    };
    let (z, p_value) = paired_credit_z(c.variant, c.control);
    InterleavingRow {
        segment: segment.to_string(),
        sessions: c.sessions,
        control_credits: c.control,
        variant_credits: c.variant,
        delta,
        z,
        p_value,
        significant: p_value < alpha,
    }
}

/// One A/B metric with its relative lift and significance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbMetric {
    pub name: String,
    pub control_value: f64,
    pub variant_value: f64,
    /// Relative change; for Session Abandonment lower is better.
    pub lift: f64,
    pub z: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// ATC@10, Sessions with ATC, and Session Abandonment lifts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbReport {
    pub alpha: f64,
    pub control_sessions: u64,
    pub variant_sessions: u64,
    pub metrics: Vec<AbMetric>,
}

impl AbReport {
    pub fn metric(&self, name: &str) -> Option<&AbMetric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn to_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "metric,control,variant,lift,significant")?;
        for m in &self.metrics {
            writeln!(
                out,
                "{},{},{},{},{}",
                m.name, m.control_value, m.variant_value, m.lift, m.significant
            )?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct ArmTally {
    sessions: u64,
    sessions_with_atc: u64,
    abandoned: u64,
    atc_events: u64,
    atc_events_top10: u64,
}

/// Run a 50/50 A/B test; each arm serves its own model's static ranking.
pub fn run_ab_test(
    control: &GBDTModel,
    variant: &GBDTModel,
    setup: &TestSetup,
) -> Result<AbReport> {
    if setup.test_days.is_empty() || setup.sessions_per_day == 0 {
        return Err(Error::Experiment("zero test sessions".into()));
    }
    let world = setup.world;
    let reference_day = setup.test_days.start - 1;
    let candidates_by_query: Vec<Vec<usize>> = world
        .queries
        .iter()
        .map(|q| q.catalog_at(reference_day))
        .collect();

    let control_scores = score_queries(control, setup, &candidates_by_query)?;
    let variant_scores = score_queries(variant, setup, &candidates_by_query)?;

    let mut arms = [ArmTally::default(), ArmTally::default()];
    for day in setup.test_days.clone() {
        for (q_idx, query) in world.queries.iter().enumerate() {
            if candidates_by_query[q_idx].is_empty() {
                continue;
            }
            let ranking_control = ranking_from_scores(&control_scores[q_idx]);
            let ranking_variant = ranking_from_scores(&variant_scores[q_idx]);
            for source in Source::ALL {
                let mut rng = derive_rng(
                    setup.seed,
                    &[4, q_idx as u64, day as u64, source as u64],
                );
                for _ in 0..setup.sessions_per_day {
                    let in_variant = rng.random_bool(0.5);
                    let ranking = if in_variant {
                        &ranking_variant
                    } else {
                        &ranking_control
                    };
                    let session = simulate_session(
                        query,
                        ranking,
                        day,
                        source,
                        world.config.page_length,
                        &mut rng,
                    );
                    let tally = &mut arms[in_variant as usize];
                    tally.sessions += 1;
                    let mut any_click = false;
                    let mut any_atc = false;
                    for (rank0, pos) in session.positions.iter().enumerate() {
                        any_click |= pos.clicked;
                        if pos.atc {
                            any_atc = true;
                            tally.atc_events += 1;
                            if rank0 < 10 {
                                tally.atc_events_top10 += 1;
                            }
                        }
                    }
                    tally.sessions_with_atc += any_atc as u64;
                    tally.abandoned += !any_click as u64;
                }
            }
        }
    }

    let [control_tally, variant_tally] = arms;
    if control_tally.sessions == 0 || variant_tally.sessions == 0 {
        return Err(Error::Experiment("an arm received zero sessions".into()));
    }

    let alpha = 0.10;
    let metric = |name: &str, sc: u64, nc: u64, sv: u64, nv: u64| {
        let cv = if nc > 0 { sc as f64 / nc as f64 } else { 0.0 };
        let vv = if nv > 0 { sv as f64 / nv as f64 } else { 0.0 };
        let lift = if cv > 0.0 { (vv - cv) / cv } else { 0.0 };
        let (z, p_value) = crate::stats::two_proportion_z(sv, nv, sc, nc);
        AbMetric {
            name: name.to_string(),
            control_value: cv,
            variant_value: vv,
            lift,
            z,
            p_value,
            significant: p_value < alpha,
        }
    };

    Ok(AbReport {
        alpha,
        control_sessions: control_tally.sessions,
        variant_sessions: variant_tally.sessions,
        metrics: vec![
            metric(
                "ATC@10",
                control_tally.atc_events_top10,
                control_tally.atc_events,
                variant_tally.atc_events_top10,
                variant_tally.atc_events,
            ),
            metric(
                "Sessions with ATC",
                control_tally.sessions_with_atc,
                control_tally.sessions,
                variant_tally.sessions_with_atc,
                variant_tally.sessions,
            ),
            metric(
                "Session Abandonment",
                control_tally.abandoned,
                control_tally.sessions,
                variant_tally.abandoned,
                variant_tally.sessions,
            ),
        ],
    })
}

/// Temporal layout and hyperparameters for the end-to-end reproduction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Feature reference day indices; each snapshot contributes one batch of
    /// training groups labeled from the following window.
    pub snapshots: Vec<u32>,
    pub label_window_days: u32,
    pub test_start: u32,
    pub test_days: u32,
    /// Test sessions per day per query per source.
    pub test_sessions_per_day: u32,
    pub train_params: TrainParams,
    pub priors: PriorConfig,
    pub credit_rule: CreditRule,
}

impl ExperimentPlan {
    /// Layout matched to [`crate::simulator::ScenarioConfig::standard`]:
    /// training snapshots with 7-day label windows, then a 14-day test.
    pub fn standard() -> ExperimentPlan {
        ExperimentPlan {
            snapshots: vec![258, 265, 272],
            label_window_days: 7,
            test_start: 280,
            test_days: 14,
            test_sessions_per_day: 150,
            train_params: TrainParams {
                num_trees: 200,
                max_depth: 7,
                min_samples_leaf: 15,
                learning_rate: 0.1,
                sigma: 1.0,
                ndcg_k: 10,
                seed: 42,
            },
            priors: PriorConfig::default(),
            credit_rule: CreditRule::TeamExclusive,
        }
    }
}

/// Train one variant from the plan's snapshots.
pub fn train_variant(
    variant: ModelVariant,
    world: &World,
    log: &[EngagementEvent],
    plan: &ExperimentPlan,
) -> Result<crate::ltr::TrainResult> {
    let labels = world.vertical_labels();
    let mut groups = Vec::new();
    let feature_names = variant_feature_names(variant);
    for &snapshot in &plan.snapshots {
        let reference_date = world.config.date_of(snapshot);
        let label_window = (
            world.config.date_of(snapshot + 1),
            world.config.date_of(snapshot + plan.label_window_days),
        );
        let universe = world.universe_at(snapshot);
        let ds = assemble_variant_dataset(
            log,
            &labels,
            variant,
            reference_date,
            label_window,
            &universe,
            &plan.priors,
        )?;
        groups.extend(ds.groups);
    }
    let dataset = RankingDataset {
        groups,
        feature_names,
    };
    train(&dataset, &plan.train_params)
}

/// Short/long window child shares under the Fashion and Consumables
/// vertical nodes of Model C — the directional content of the structural
/// analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowShares {
    pub fashion_short: f64,
    pub fashion_long: f64,
    pub consumables_short: f64,
    pub consumables_long: f64,
}

fn has_window(name: &str, days: u32) -> bool {
    name.split('_').nth(1) == Some(&days.to_string())
}

/// Compute [`WindowShares`] from a Model C adjacency report.
pub fn window_shares(report: &NodeAdjacencyReport) -> WindowShares {
    let share = |vertical: Vertical, days: u32| {
        report
            .share_where(&vertical_feature_name(vertical), |n| has_window(n, days))
            .unwrap_or(f64::NAN)
    };
    WindowShares {
        fashion_short: share(Vertical::Fashion, SHORT_WINDOW_DAYS),
        fashion_long: share(Vertical::Fashion, LONG_WINDOW_DAYS),
        consumables_short: share(Vertical::Consumables, SHORT_WINDOW_DAYS),
        consumables_long: share(Vertical::Consumables, LONG_WINDOW_DAYS),
    }
}

/// One variant-vs-baseline interleaving result inside a repro summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantTest {
    pub name: String,
    pub report: InterleavingReport,
}

/// End-to-end output of the standard-scenario reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproSummary {
    pub seed: u64,
    /// Final training NDCG per variant.
    pub train_ndcg: BTreeMap<String, f64>,
    /// A vs Baseline, B vs Baseline, C vs Baseline.
    pub tests: Vec<VariantTest>,
    pub adjacency: NodeAdjacencyReport,
    pub shares: WindowShares,
}

impl ReproSummary {
    pub fn test(&self, name: &str) -> &InterleavingReport {
        &self
            .tests
            .iter()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("no test named {name}"))
            .report
    }

    /// Human-readable comparison table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("Repro summary (seed {})\n", self.seed));
        for (name, ndcg) in &self.train_ndcg {
            out.push_str(&format!("  train NDCG@10 {name}: {ndcg:.4}\n"));
        }
        for test in &self.tests {
            out.push_str(&format!(
                "\n{} (credit rule: {})\n",
                test.name, test.report.credit_rule
            ));
            out.push_str("  segment        delta      significant  sessions\n");
            for row in &test.report.rows {
                out.push_str(&format!(
                    "  {:<13} {:>+8.2}%  {:<11}  {}\n",
                    row.segment,
                    row.delta * 100.0,
                    if row.significant { "yes" } else { "no" },
                    row.sessions
                ));
            }
        }
        out.push_str(&format!(
            "\nModel C tree structure: short-window share under Fashion {:.3} vs Consumables {:.3}; \
             long-window share under Fashion {:.3} vs Consumables {:.3}\n",
            self.shares.fashion_short,
            self.shares.consumables_short,
            self.shares.fashion_long,
            self.shares.consumables_long
        ));
        out
    }
}

/// Run the full standard-scenario pipeline: simulate, build features, train
/// all four variants, run the three interleaving tests against the
/// Baseline, and analyze Model C's tree structure.
pub fn repro_standard_scenario(
    config: &crate::simulator::ScenarioConfig,
    plan: &ExperimentPlan,
) -> Result<ReproSummary> {
    let world = crate::simulator::generate_world(config)?;
    let log = crate::simulator::generate_event_log(&world, 0..plan.test_start);

    let mut models = BTreeMap::new();
    let mut train_ndcg = BTreeMap::new();
    for variant in ModelVariant::ALL {
        let result = train_variant(variant, &world, &log, plan)?;
        train_ndcg.insert(
            variant.name().to_string(),
            result.round_ndcg.last().copied().unwrap_or(1.0),
        );
        models.insert(variant, result.model);
    }

    let setup = TestSetup {
        world: &world,
        history: &log,
        priors: &plan.priors,
        test_days: plan.test_start..plan.test_start + plan.test_days,
        sessions_per_day: plan.test_sessions_per_day,
        credit_rule: plan.credit_rule,
        seed: config.seed,
    };

    let baseline = &models[&ModelVariant::Baseline];
    let mut tests = Vec::new();
    for variant in [ModelVariant::ModelA, ModelVariant::ModelB, ModelVariant::ModelC] {
        let report = run_interleaving_test(baseline, &models[&variant], &setup)?;
        tests.push(VariantTest {
            name: format!("{} vs Baseline", variant.name()),
            report,
        });
    }

    let model_c = &models[&ModelVariant::ModelC];
    let parents: BTreeSet<String> = Vertical::ALL
        .iter()
        .map(|v| vertical_feature_name(*v))
        .collect();
    let behavioral: BTreeSet<String> = model_c
        .feature_names
        .iter()
        .filter(|n| !n.starts_with("vertical_"))
        .cloned()
        .collect();
    let adjacency = child_feature_distribution(model_c, &parents, Some(&behavioral))?;
    let shares = window_shares(&adjacency);

    Ok(ReproSummary {
        seed: config.seed,
        train_ndcg,
        tests,
        adjacency,
        shares,
    })
}
