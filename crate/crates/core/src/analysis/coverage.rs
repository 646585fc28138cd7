use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{for_each_bag, fractional_ranks, FrequencyTable};
use crate::error::{Error, Result};
use crate::instance::InstanceRecord;
use crate::substructure::{SubstructureConfig, SubstructureKey};

/// Partition of the pool-rank axis. Each edge is the inclusive lower bound
/// of a bucket; the last bucket is unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BucketSpec {
    /// Edges 1, b, b^2, ... up to the largest rank.
    Geometric { base: f64 },
    Edges(Vec<f64>),
}

impl Default for BucketSpec {
    fn default() -> Self {
        BucketSpec::Geometric { base: 2.0 }
    }
}

impl BucketSpec {
    pub fn edges(&self, max_rank: f64) -> Result<Vec<f64>> {
        match self {
            BucketSpec::Geometric { base } => {
                if !(*base > 1.0) {
                    return Err(Error::Config(format!("bucket base must exceed 1, got {base}")));
                }
                let mut edges = vec![1.0];
                let mut e = *base;
                while e <= max_rank {
                    edges.push(e);
                    e *= base;
                }
                Ok(edges)
            }
            BucketSpec::Edges(edges) => {
                if edges.first() != Some(&1.0) || edges.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Config(
                        "bucket edges must start at 1 and increase strictly".into(),
                    ));
                }
                Ok(edges.clone())
            }
        }
    }
}

fn bucket_of(edges: &[f64], rank: f64) -> usize {
    edges.partition_point(|&e| e <= rank) - 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCoverage {
    pub name: String,
    pub size: usize,
    /// Distinct pool keys per bucket present in at least one sampled instance.
    pub counts: Vec<usize>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub kind: String,
    pub pool_size: usize,
    pub edges: Vec<f64>,
    /// Distinct pool keys per bucket.
    pub pool_counts: Vec<usize>,
    pub pool_total: usize,
    pub samples: Vec<SampleCoverage>,
}

/// Coverage of several named samples against the pool's rank buckets.
pub fn coverage_report(
    pool: &[InstanceRecord],
    samples: &[(String, Vec<String>)],
    cfg: &SubstructureConfig,
    buckets: &BucketSpec,
) -> Result<CoverageReport> {
    let position: HashMap<&str, usize> = pool
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let mut members: Vec<Vec<usize>> = Vec::with_capacity(samples.len());
    for (_, ids) in samples {
        let mut rows = Vec::with_capacity(ids.len());
        for id in ids {
            match position.get(id.as_str()) {
                Some(&i) => rows.push(i),
                None => return Err(Error::SampleNotSubsetOfPool(id.clone())),
            }
        }
        members.push(rows);
    }

    let mut in_sample: Vec<Vec<usize>> = vec![Vec::new(); pool.len()];
    for (s, rows) in members.iter().enumerate() {
        for &i in rows {
            if in_sample[i].last() != Some(&s) {
                in_sample[i].push(s);
            }
        }
    }

    let mut table = std::collections::BTreeMap::new();
    let mut covered: Vec<HashSet<SubstructureKey>> = vec![HashSet::new(); samples.len()];
    let mut i = 0;
    for_each_bag(pool, cfg, |_, bag| {
        for &s in &in_sample[i] {
            covered[s].extend(bag.iter().cloned());
        }
        for key in bag {
            *table.entry(key).or_insert(0usize) += 1;
        }
        i += 1;
    });
    let table = FrequencyTable(table);

    let (edges, ranks) = if table.is_empty() {
        (vec![1.0], Default::default())
    } else {
        let ranks = fractional_ranks(&table)?;
        let max_rank = ranks.0.values().copied().fold(1.0, f64::max);
        (buckets.edges(max_rank)?, ranks)
    };
    let mut pool_counts = vec![0; edges.len()];
    let mut bucket_by_key: HashMap<&SubstructureKey, usize> = HashMap::new();
    for (key, &rank) in &ranks.0 {
        let b = bucket_of(&edges, rank);
        pool_counts[b] += 1;
        bucket_by_key.insert(key, b);
    }
    let samples = samples
        .iter()
        .zip(&covered)
        .zip(&members)
        .map(|(((name, _), keys), rows)| {
            let mut counts = vec![0; edges.len()];
            for key in keys {
                counts[bucket_by_key[key]] += 1;
            }
            SampleCoverage {
                name: name.clone(),
                size: rows.len(),
                total: keys.len(),
                counts,
            }
        })
        .collect();
    Ok(CoverageReport {
        kind: cfg.kind.to_string(),
        pool_size: pool.len(),
        pool_total: table.len(),
        edges,
        pool_counts,
        samples,
    })
}

/// Coverage of one sample.
pub fn coverage_buckets(
    sample: &[String],
    pool: &[InstanceRecord],
    cfg: &SubstructureConfig,
    buckets: &BucketSpec,
) -> Result<CoverageReport> {
    coverage_report(pool, &[("sample".to_string(), sample.to_vec())], cfg, buckets)
}
