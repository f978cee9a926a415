//! Square-root frequency rebalancing by adding accepted synthetics.
//!
//! With `n_max` the size of the largest cluster, cluster `c` is topped up to
//! `round(sqrt(n_c * n_max))`, which makes post-augmentation frequencies
//! proportional to the square roots of the original frequencies while
//! leaving the largest cluster untouched.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn target_counts(original: &BTreeMap<String, usize>) -> Result<BTreeMap<String, usize>> {
    let n_max = original.values().copied().max().unwrap_or(0);
    if n_max == 0 {
        return Err(Error::InvalidInput("census has no members".into()));
    }
    Ok(original
        .iter()
        .map(|(label, &n)| {
            let t = ((n as f64) * (n_max as f64)).sqrt().round() as usize;
            (label.clone(), t.max(n))
        })
        .collect())
}

/// Picks up to `target - original` accepted candidates per label.
///
/// Candidate ids are sorted first; when more are available than needed a
/// seeded uniform sample without replacement is taken and returned in
/// sorted order.
pub fn select_augmented(
    accepted: &BTreeMap<String, Vec<String>>,
    original: &BTreeMap<String, usize>,
    targets: &BTreeMap<String, usize>,
    seed: u64,
) -> BTreeMap<String, Vec<String>> {
    let mut out = BTreeMap::new();
    for (label, &target) in targets {
        let have = original.get(label).copied().unwrap_or(0);
        let needed = target.saturating_sub(have);
        let mut pool: Vec<String> = accepted.get(label).cloned().unwrap_or_default();
        pool.sort();
        pool.dedup();
        let chosen = if pool.len() <= needed {
            pool
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ label_hash(label));
            let mut idx = index::sample(&mut rng, pool.len(), needed).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| pool[i].clone()).collect()
        };
        out.insert(label.clone(), chosen);
    }
    out
}

/// FNV-1a, so every label gets its own deterministic sampling stream.
fn label_hash(label: &str) -> u64 {
    label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRow {
    pub label: String,
    pub original_count: usize,
    pub accepted_candidate_count: usize,
    pub target_count: usize,
    pub selected_count: usize,
}

impl CensusRow {
    pub fn after_count(&self) -> usize {
        self.original_count + self.selected_count
    }

    /// Synthetics missing to reach the target.
    pub fn shortfall(&self) -> usize {
        self.target_count.saturating_sub(self.after_count())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClusterCensus {
    pub rows: Vec<CensusRow>,
}

impl ClusterCensus {
    pub fn build(
        original: &BTreeMap<String, usize>,
        accepted: &BTreeMap<String, Vec<String>>,
        targets: &BTreeMap<String, usize>,
        selected: &BTreeMap<String, Vec<String>>,
    ) -> Self {
        let rows = original
            .iter()
            .map(|(label, &n)| CensusRow {
                label: label.clone(),
                original_count: n,
                accepted_candidate_count: accepted.get(label).map_or(0, Vec::len),
                target_count: targets.get(label).copied().unwrap_or(n),
                selected_count: selected.get(label).map_or(0, Vec::len),
            })
            .collect();
        Self { rows }
    }

    pub fn total_selected(&self) -> usize {
        self.rows.iter().map(|r| r.selected_count).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub label: String,
    pub before_count: usize,
    pub after_count: usize,
    pub before_pct: f64,
    pub after_pct: f64,
    pub shortfall: usize,
}

/// Before/after counts and percentages per label.
pub fn census_report(census: &ClusterCensus) -> Vec<FrequencyRow> {
    let before_total: usize = census.rows.iter().map(|r| r.original_count).sum();
    let after_total: usize = census.rows.iter().map(CensusRow::after_count).sum();
    let pct = |n: usize, total: usize| if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 };
    census
        .rows
        .iter()
        .map(|r| FrequencyRow {
            label: r.label.clone(),
            before_count: r.original_count,
            after_count: r.after_count(),
            before_pct: pct(r.original_count, before_total),
            after_pct: pct(r.after_count(), after_total),
            shortfall: r.shortfall(),
        })
        .collect()
}
