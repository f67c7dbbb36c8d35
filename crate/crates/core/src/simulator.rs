//! Synthetic catalog, drifting engagement propensities, and clickstream
//! generation under a position-biased user model.
//!
//! Verticals get independent dynamics knobs: stable ones (Food,
//! Consumables) run with zero drift and no product arrivals, dynamic ones
//! drift in logit space and receive mid-horizon arrivals, so long and short
//! lookback windows trade off the way they do in live traffic.

use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_log::{EngagementEvent, Source, Vertical, VerticalLabelMap};

/// Dynamics knobs for one vertical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerticalDynamics {
    /// Std-dev of the daily logit-space random walk on click propensity.
    pub drift_rate: f64,
    /// Probability per day per query that a new product arrives.
    pub arrival_rate: f64,
    pub click_range: (f64, f64),
    pub atc_given_click_range: (f64, f64),
    pub order_given_atc_range: (f64, f64),
}

/// Full scenario description; serializable as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub queries_per_vertical: usize,
    pub products_per_query: usize,
    pub horizon_days: u32,
    pub start_date: NaiveDate,
    /// Results-page length; positions beyond it are never examined.
    pub page_length: usize,
    /// Logged sessions per day per query, per source.
    pub sessions_per_day_web: u32,
    pub sessions_per_day_app: u32,
    /// Std-dev of the Gaussian noise the logging ranker adds to true
    /// click propensity.
    pub logging_noise: f64,
    pub seed: u64,
    /// Keyed by vertical name; all six must be present.
    pub dynamics: BTreeMap<String, VerticalDynamics>,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if self.page_length < 1 {
            return bad("page_length must be >= 1".into());
        }
        if self.horizon_days < 1 || self.queries_per_vertical < 1 || self.products_per_query < 1 {
            return bad("horizon, queries and products must all be >= 1".into());
        }
        for vertical in Vertical::ALL {
            let Some(dyn_) = self.dynamics.get(vertical.name()) else {
                return bad(format!("missing dynamics for vertical {vertical}"));
            };
            if dyn_.drift_rate < 0.0 || !(0.0..=1.0).contains(&dyn_.arrival_rate) {
                return bad(format!("bad drift/arrival for {vertical}"));
            }
            for (lo, hi) in [
                dyn_.click_range,
                dyn_.atc_given_click_range,
                dyn_.order_given_atc_range,
            ] {
                if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                    return bad(format!("bad propensity range for {vertical}"));
                }
            }
        }
        Ok(())
    }

    pub fn dynamics_for(&self, vertical: Vertical) -> &VerticalDynamics {
        &self.dynamics[vertical.name()]
    }

    pub fn date_of(&self, day: u32) -> NaiveDate {
        self.start_date + Days::new(day as u64)
    }

    /// The standard scenario: stable Food/Consumables, drifting GM
    /// verticals with mid-horizon product arrivals.
    pub fn standard(seed: u64) -> ScenarioConfig {
        // Stable verticals keep fixed propensities over the horizon;
        // dynamic verticals drift briskly and see mid-horizon arrivals,
        // so their long-window rates go stale.
        let stable = VerticalDynamics {
            drift_rate: 0.0,
            arrival_rate: 0.0,
            click_range: (0.08, 0.30),
            atc_given_click_range: (0.2, 0.6),
            order_given_atc_range: (0.2, 0.6),
        };
        let dynamic = VerticalDynamics {
            drift_rate: 0.35,
            arrival_rate: 0.03,
            click_range: (0.05, 0.45),
            atc_given_click_range: (0.2, 0.6),
            order_given_atc_range: (0.2, 0.6),
        };
        let mut dynamics = BTreeMap::new();
        for vertical in Vertical::ALL {
            let d = if vertical.is_general_merchandise() {
                dynamic
            } else {
                stable
            };
            dynamics.insert(vertical.name().to_string(), d);
        }
        ScenarioConfig {
            queries_per_vertical: 12,
            products_per_query: 10,
            horizon_days: 300,
            start_date: NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
            page_length: 20,
            sessions_per_day_web: 2,
            sessions_per_day_app: 1,
            logging_noise: 0.15,
            seed,
            dynamics,
        }
    }
}

/// One catalog entry; products arriving after day 0 are the cold-start cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Product {
    pub product_id: String,
    pub arrival_day: u32,
}

/// Latent propensities for one (product, day). The funnel ordering
/// order ≤ atc ≤ click holds by construction since the lower stages are
/// conditional fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayAffinity {
    pub click: f64,
    pub atc_given_click: f64,
    pub order_given_atc: f64,
}

impl DayAffinity {
    pub fn atc(&self) -> f64 {
        self.click * self.atc_given_click
    }
    pub fn order(&self) -> f64 {
        self.atc() * self.order_given_atc
    }
}

/// One query with its products and their per-day true affinities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryWorld {
    pub query_id: String,
    pub vertical: Vertical,
    pub products: Vec<Product>,
    /// affinity[product][day], day indexed 0..horizon_days.
    pub affinity: Vec<Vec<DayAffinity>>,
}

impl QueryWorld {
    /// Product indices present in the catalog on `day`.
    pub fn catalog_at(&self, day: u32) -> Vec<usize> {
        self.products
            .iter()
            .enumerate()
            .filter(|(_, p)| p.arrival_day <= day)
            .map(|(i, _)| i)
            .collect()
    }
}

/// The full synthetic environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub config: ScenarioConfig,
    pub queries: Vec<QueryWorld>,
}

impl World {
    pub fn vertical_labels(&self) -> VerticalLabelMap {
        let mut map = VerticalLabelMap::default();
        for q in &self.queries {
            map.entries.insert(q.query_id.clone(), q.vertical);
        }
        map
    }

    /// All (query, product) pairs in the catalog on `day`.
    pub fn universe_at(&self, day: u32) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for q in &self.queries {
            for idx in q.catalog_at(day) {
                out.push((q.query_id.clone(), q.products[idx].product_id.clone()));
            }
        }
        out
    }

    /// True-affinity snapshot as CSV for debugging.
    pub fn affinities_to_csv(&self, mut out: impl std::io::Write) -> Result<()> {
        writeln!(out, "query_id,product_id,day,click,atc,order")?;
        for q in &self.queries {
            for (p_idx, product) in q.products.iter().enumerate() {
                for day in product.arrival_day..self.config.horizon_days {
                    let a = q.affinity[p_idx][day as usize];
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        q.query_id,
                        product.product_id,
                        day,
                        a.click,
                        a.atc(),
                        a.order()
                    )?;
                }
            }
        }
        Ok(())
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Splitmix64-based stream derivation; every consumer of randomness owns a
/// stream keyed by (seed, tags...), so results are schedule-independent.
pub fn derive_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0x9e3779b97f4a7c15;
    for &tag in tags {
        state ^= tag.wrapping_add(0x9e3779b97f4a7c15);
        state = state.wrapping_mul(0xbf58476d1ce4e5b9);
        state ^= state >> 27;
        state = state.wrapping_mul(0x94d049bb133111eb);
        state ^= state >> 31;
    }
    ChaCha8Rng::seed_from_u64(state)
}

fn sample_range(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

const PROPENSITY_FLOOR: f64 = 0.005;
const PROPENSITY_CEIL: f64 = 0.95;

fn gen_product_affinity(
    dyn_: &VerticalDynamics,
    arrival_day: u32,
    horizon: u32,
    rng: &mut ChaCha8Rng,
) -> Vec<DayAffinity> {
    let base_click = sample_range(rng, dyn_.click_range).clamp(PROPENSITY_FLOOR, PROPENSITY_CEIL);
    let atc_given_click = sample_range(rng, dyn_.atc_given_click_range);
    let order_given_atc = sample_range(rng, dyn_.order_given_atc_range);

    let mut days = Vec::with_capacity(horizon as usize);
    let mut click_logit = logit(base_click);
    let walk = if dyn_.drift_rate > 0.0 {
        Some(Normal::new(0.0, dyn_.drift_rate).unwrap())
    } else {
        None
    };
    for day in 0..horizon {
        if day > arrival_day {
            if let Some(walk) = &walk {
                click_logit += walk.sample(rng);
            }
        }
        let click = sigmoid(click_logit).clamp(PROPENSITY_FLOOR, PROPENSITY_CEIL);
        days.push(DayAffinity {
            click,
            atc_given_click,
            order_given_atc,
        });
    }
    // Days before arrival are never served; hold the arrival value there so
    // the vector stays rectangular.
    for day in 0..arrival_day as usize {
        days[day] = days[arrival_day as usize];
    }
    days
}

/// Build the catalog and true-affinity process for a scenario.
/// Deterministic given the config's seed.
pub fn generate_world(config: &ScenarioConfig) -> Result<World> {
    config.validate()?;
    let mut queries = Vec::new();
    for (v_idx, vertical) in Vertical::ALL.iter().enumerate() {
        let dyn_ = config.dynamics_for(*vertical);
        for q_idx in 0..config.queries_per_vertical {
            let query_id = format!("{}_q{:02}", vertical.name().to_lowercase(), q_idx);
            let mut rng = derive_rng(config.seed, &[1, v_idx as u64, q_idx as u64]);

            let mut products = Vec::new();
            for p_idx in 0..config.products_per_query {
                products.push(Product {
                    product_id: format!("{query_id}_p{p_idx:03}"),
                    arrival_day: 0,
                });
            }
            for day in 1..config.horizon_days {
                if dyn_.arrival_rate > 0.0 && rng.random::<f64>() < dyn_.arrival_rate {
                    products.push(Product {
                        product_id: format!("{query_id}_p{:03}", products.len()),
                        arrival_day: day,
                    });
                }
            }

            let affinity = products
                .iter()
                .map(|p| gen_product_affinity(dyn_, p.arrival_day, config.horizon_days, &mut rng))
                .collect();

            queries.push(QueryWorld {
                query_id,
                vertical: *vertical,
                products,
                affinity,
            });
        }
    }
    Ok(World {
        config: config.clone(),
        queries,
    })
}

/// Examination probability at 1-based position r: 1/log2(r+1), zero beyond
/// the page length.
pub fn examination_probability(rank: usize, page_length: usize) -> f64 {
    if rank > page_length {
        0.0
    } else {
        1.0 / ((rank as f64) + 1.0).log2()
    }
}

/// Outcome at one position of a served ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositionOutcome {
    /// Index into the query's product list.
    pub product: usize,
    pub examined: bool,
    pub clicked: bool,
    pub atc: bool,
    pub ordered: bool,
}

/// One simulated search session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatedSession {
    pub query_id: String,
    pub day: u32,
    pub source: Source,
    pub positions: Vec<PositionOutcome>,
}

impl SimulatedSession {
    pub fn has_engagement(&self) -> bool {
        self.positions.iter().any(|p| p.clicked)
    }
}

/// Run the position-biased funnel over one served ranking.
/// `ranking` holds product indices; affinities are looked up at `day`.
pub fn simulate_session(
    query: &QueryWorld,
    ranking: &[usize],
    day: u32,
    source: Source,
    page_length: usize,
    rng: &mut ChaCha8Rng,
) -> SimulatedSession {
    assert!(!ranking.is_empty(), "ranking must be non-empty");
    let mut positions = Vec::with_capacity(ranking.len().min(page_length));
    for (rank0, &product) in ranking.iter().enumerate().take(page_length) {
        let a = query.affinity[product][day as usize];
        let examined = rng.random::<f64>() < examination_probability(rank0 + 1, page_length);
        let clicked = examined && rng.random::<f64>() < a.click;
        let atc = clicked && rng.random::<f64>() < a.atc_given_click;
        let ordered = atc && rng.random::<f64>() < a.order_given_atc;
        positions.push(PositionOutcome {
            product,
            examined,
            clicked,
            atc,
            ordered,
        });
    }
    SimulatedSession {
        query_id: query.query_id.clone(),
        day,
        source,
        positions,
    }
}

/// Rank `candidates` by true click propensity plus Gaussian noise — the
/// logging (behavior) policy that collects training data.
pub fn noisy_affinity_ranking(
    query: &QueryWorld,
    candidates: &[usize],
    day: u32,
    noise_sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&p| {
            let noise = if noise_sigma > 0.0 {
                noise_sigma * normal.sample(rng)
            } else {
                0.0
            };
            (query.affinity[p][day as usize].click + noise, p)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, p)| p).collect()
}

/// Sessions per day for a source, from the scenario config.
fn sessions_per_day(config: &ScenarioConfig, source: Source) -> u32 {
    match source {
        Source::Web => config.sessions_per_day_web,
        Source::App => config.sessions_per_day_app,
    }
}

/// Generate the daily event log for `days` under the noisy-affinity logging
/// policy. Counts per (query, product, source, day) sum session outcomes;
/// examines count sessions in which the product was examined.
pub fn generate_event_log(world: &World, days: std::ops::Range<u32>) -> Vec<EngagementEvent> {
    let config = &world.config;
    let mut counts: BTreeMap<(String, String, Source, NaiveDate), [u64; 4]> = BTreeMap::new();

    for day in days {
        for (q_idx, query) in world.queries.iter().enumerate() {
            let candidates = query.catalog_at(day);
            if candidates.is_empty() {
                continue;
            }
            for source in Source::ALL {
                let src_tag = source as u64;
                let mut rng = derive_rng(config.seed, &[2, q_idx as u64, day as u64, src_tag]);
                for _session in 0..sessions_per_day(config, source) {
                    let ranking = noisy_affinity_ranking(
                        query,
                        &candidates,
                        day,
                        config.logging_noise,
                        &mut rng,
                    );
                    let session = simulate_session(
                        query,
                        &ranking,
                        day,
                        source,
                        config.page_length,
                        &mut rng,
                    );
                    for pos in &session.positions {
                        if !pos.examined {
                            continue;
                        }
                        let key = (
                            query.query_id.clone(),
                            query.products[pos.product].product_id.clone(),
                            source,
                            config.date_of(day),
                        );
                        let c = counts.entry(key).or_insert([0; 4]);
                        c[0] += 1;
                        c[1] += pos.clicked as u64;
                        c[2] += pos.atc as u64;
                        c[3] += pos.ordered as u64;
                    }
                }
            }
        }
    }

    counts
        .into_iter()
        .map(
            |((query_id, product_id, source, day), [examines, clicks, atcs, orders])| {
                EngagementEvent {
                    query_id,
                    product_id,
                    source,
                    day,
                    examines,
                    clicks,
                    atcs,
                    orders,
                }
            },
        )
        .collect()
}
