//! Diversity measurements over sets of instances: substructure frequencies,
//! fractional ranks, rank-bucketed coverage and mutual information.

mod coverage;
mod mi;

pub use coverage::{coverage_buckets, coverage_report, BucketSpec, CoverageReport, SampleCoverage};
pub use mi::{ami, mi_from_counts, pairwise_mi, CoOccurrence, MiOptions, MiPair, MiReport};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::InstanceRecord;
use crate::substructure::{bag_keys, SubstructureConfig, SubstructureKey, SubstructureKind};

const CHUNK: usize = 4096;

/// Visit the bag of every instance in order. Bags are extracted in parallel,
/// one chunk at a time.
pub(crate) fn for_each_bag<'a, I>(
    instances: I,
    cfg: &SubstructureConfig,
    mut visit: impl FnMut(&'a InstanceRecord, BTreeSet<SubstructureKey>),
) where
    I: IntoIterator<Item = &'a InstanceRecord>,
{
    let mut iter = instances.into_iter().peekable();
    while iter.peek().is_some() {
        let chunk: Vec<&InstanceRecord> = iter.by_ref().take(CHUNK).collect();
        let bags: Vec<_> = chunk.par_iter().map(|r| bag_keys(r, cfg)).collect();
        for (rec, bag) in chunk.into_iter().zip(bags) {
            visit(rec, bag);
        }
    }
}

/// F_A(s): number of instances of A containing s.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable(pub BTreeMap<SubstructureKey, usize>);

impl FrequencyTable {
    pub fn from_bags<I, B>(bags: I) -> Self
    where
        I: IntoIterator<Item = B>,
        B: IntoIterator<Item = SubstructureKey>,
    {
        let mut table = BTreeMap::new();
        for bag in bags {
            let bag: BTreeSet<SubstructureKey> = bag.into_iter().collect();
            for key in bag {
                *table.entry(key).or_insert(0) += 1;
            }
        }
        FrequencyTable(table)
    }

    pub fn get(&self, key: &SubstructureKey) -> usize {
        self.0.get(key).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn frequency_table<'a, I>(instances: I, cfg: &SubstructureConfig) -> FrequencyTable
where
    I: IntoIterator<Item = &'a InstanceRecord>,
{
    let mut table = BTreeMap::new();
    for_each_bag(instances, cfg, |_, bag| {
        for key in bag {
            *table.entry(key).or_insert(0usize) += 1;
        }
    });
    FrequencyTable(table)
}

/// Rank by descending frequency, 1-based; equal frequencies share the mean
/// of the positions they occupy.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankTable(pub BTreeMap<SubstructureKey, f64>);

impl RankTable {
    pub fn get(&self, key: &SubstructureKey) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn fractional_ranks(table: &FrequencyTable) -> Result<RankTable> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut entries: Vec<(&SubstructureKey, usize)> = table.0.iter().map(|(k, &f)| (k, f)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut ranks = BTreeMap::new();
    let mut start = 0;
    while start < entries.len() {
        let f = entries[start].1;
        let end = start + entries[start..].iter().take_while(|e| e.1 == f).count();
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for (key, _) in &entries[start..end] {
            ranks.insert((*key).clone(), rank);
        }
        start = end;
    }
    Ok(RankTable(ranks))
}

/// Unique substructure counts of a pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStats {
    pub instances: usize,
    pub bigrams: usize,
    pub subtrees: usize,
    pub templates: usize,
}

/// Instances plus unique bigrams, subtrees of at most `d` nodes and templates.
pub fn stats(pool: &[InstanceRecord], d: usize) -> PoolStats {
    let count = |cfg: SubstructureConfig| {
        let mut seen: HashSet<SubstructureKey> = HashSet::new();
        for_each_bag(pool, &cfg, |_, bag| seen.extend(bag));
        seen.len()
    };
    let templates: HashSet<&str> = pool.iter().map(|r| r.template.as_str()).collect();
    PoolStats {
        instances: pool.len(),
        bigrams: count(SubstructureConfig::of_kind(SubstructureKind::Bigram)),
        subtrees: count(SubstructureConfig {
            d,
            ..SubstructureConfig::of_kind(SubstructureKind::Subtree)
        }),
        templates: templates.len(),
    }
}
