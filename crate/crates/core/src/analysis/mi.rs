//! Mutual information between substructure-presence indicators.
//!
//! For a sample D and substructures s_i, s_j, the indicator pair
//! (I_{s_i}, I_{s_j}) has an empirical 2x2 joint distribution built from the
//! containing counts n_i, n_j and the co-containing count n_ij. MI is the
//! non-negative sum over the four cells of p log(p / (p_i p_j)), in nats,
//! with 0 log 0 = 0. AMI averages MI over all ordered pairs of the sample's
//! substructures.
//!
//! Summing |S|^2 pairs directly is quadratic. Pairs that never co-occur have
//! n_ij = 0 and their MI depends only on (n_i, n_j), so they are summed per
//! pair of count classes; only co-occurring pairs are visited individually.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::for_each_bag;
use crate::error::{Error, Result};
use crate::instance::InstanceRecord;
use crate::substructure::{SubstructureConfig, SubstructureKey};

/// MI of two indicators from their contingency counts over `n` instances.
pub fn mi_from_counts(n: usize, n_i: usize, n_j: usize, n_ij: usize) -> f64 {
    debug_assert!(n_ij <= n_i.min(n_j) && n_i + n_j <= n + n_ij);
    let n = n as f64;
    let p_i = n_i as f64 / n;
    let p_j = n_j as f64 / n;
    let cells = [
        (n_ij as f64 / n, p_i, p_j),
        ((n_i - n_ij) as f64 / n, p_i, 1.0 - p_j),
        ((n_j - n_ij) as f64 / n, 1.0 - p_i, p_j),
        ((n as usize + n_ij - n_i - n_j) as f64 / n, 1.0 - p_i, 1.0 - p_j),
    ];
    let mi: f64 = cells
        .iter()
        .filter(|(p, _, _)| *p > 0.0)
        .map(|&(p, a, b)| p * (p / (a * b)).ln())
        .sum();
    mi.max(0.0)
}

/// Containing and co-containing counts of a sample's substructures.
#[derive(Debug, Clone)]
pub struct CoOccurrence {
    n: usize,
    keys: Vec<SubstructureKey>,
    counts: Vec<u32>,
    /// `rows[i]`: `(j, n_ij)` for every `j > i` with `n_ij > 0`, ascending.
    rows: Vec<Vec<(u32, u32)>>,
}

impl CoOccurrence {
    /// Build from per-instance key sets; S is ordered by key.
    pub fn from_bags(bags: &[BTreeSet<SubstructureKey>]) -> Self {
        let keys: Vec<SubstructureKey> = bags
            .iter()
            .flatten()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .cloned()
            .collect();
        let id_bags: Vec<Vec<u32>> = bags
            .iter()
            .map(|bag| {
                // both sides are sorted, so a merge walk assigns ids
                let mut ids = Vec::with_capacity(bag.len());
                let mut cursor = 0;
                for k in bag {
                    while keys[cursor] != *k {
                        cursor += 1;
                    }
                    ids.push(cursor as u32);
                }
                ids
            })
            .collect();
        let mut counts = vec![0u32; keys.len()];
        let mut partners: Vec<Vec<u32>> = vec![Vec::new(); keys.len()];
        for ids in &id_bags {
            for (a, &i) in ids.iter().enumerate() {
                counts[i as usize] += 1;
                partners[i as usize].extend_from_slice(&ids[a + 1..]);
            }
        }
        let rows = partners
            .into_par_iter()
            .map(|mut js| {
                js.sort_unstable();
                let mut row: Vec<(u32, u32)> = Vec::new();
                for j in js {
                    match row.last_mut() {
                        Some((last, c)) if *last == j => *c += 1,
                        _ => row.push((j, 1)),
                    }
                }
                row
            })
            .collect();
        CoOccurrence {
            n: bags.len(),
            keys,
            counts,
            rows,
        }
    }

    pub fn num_instances(&self) -> usize {
        self.n
    }

    pub fn keys(&self) -> &[SubstructureKey] {
        &self.keys
    }

    pub fn count(&self, i: usize) -> usize {
        self.counts[i] as usize
    }

    pub fn co_count(&self, i: usize, j: usize) -> usize {
        if i == j {
            return self.count(i);
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let row = &self.rows[a];
        row.binary_search_by_key(&(b as u32), |&(j, _)| j)
            .map_or(0, |pos| row[pos].1 as usize)
    }

    pub fn mi(&self, i: usize, j: usize) -> f64 {
        mi_from_counts(self.n, self.count(i), self.count(j), self.co_count(i, j))
    }

    /// Sum of MI over ordered pairs `(i, j)`, split into the off-diagonal and
    /// diagonal parts.
    pub fn mi_sums(&self) -> (f64, f64) {
        let n = self.n;
        if n == 0 || self.keys.is_empty() {
            return (0.0, 0.0);
        }
        let nf = n as f64;
        // plogp[k] = (k/n) ln(k/n)
        let plogp: Vec<f64> = (0..=n)
            .map(|k| {
                let p = k as f64 / nf;
                if k == 0 { 0.0 } else { p * p.ln() }
            })
            .collect();
        let entropy = |k: usize| -(plogp[k] + plogp[n - k]);
        let mi = |a: usize, b: usize, ab: usize| {
            let joint = -(plogp[ab] + plogp[a - ab] + plogp[b - ab] + plogp[n + ab - a - b]);
            entropy(a) + entropy(b) - joint
        };
        // MI of a pair that never co-occurs; such pairs need a + b <= n
        let disjoint = |a: usize, b: usize| if a + b <= n { mi(a, b, 0) } else { 0.0 };

        let mut class_size = vec![0usize; n + 1];
        for &c in &self.counts {
            class_size[c as usize] += 1;
        }
        let classes: Vec<usize> = (1..=n).filter(|&c| class_size[c] > 0).collect();
        let mut all_disjoint = 0.0;
        for &a in &classes {
            let mut row = 0.0;
            for &b in &classes {
                row += (class_size[a] * class_size[b]) as f64 * disjoint(a, b);
            }
            all_disjoint += row;
        }

        let corrections: Vec<f64> = self
            .rows
            .par_iter()
            .enumerate()
            .map(|(i, row)| {
                let a = self.counts[i] as usize;
                row.iter()
                    .map(|&(j, ab)| {
                        let b = self.counts[j as usize] as usize;
                        mi(a, b, ab as usize) - disjoint(a, b)
                    })
                    .sum::<f64>()
            })
            .collect();
        let off_corrections: f64 = corrections.iter().sum();
        let diag_disjoint: f64 = self.counts.iter().map(|&c| disjoint(c as usize, c as usize)).sum();
        let diagonal: f64 = self.counts.iter().map(|&c| entropy(c as usize)).sum();
        let off_diagonal = all_disjoint - diag_disjoint + 2.0 * off_corrections;
        (off_diagonal.max(0.0), diagonal)
    }

    pub fn ami(&self, include_diagonal: bool) -> f64 {
        let s = self.keys.len() as f64;
        let (off, diag) = self.mi_sums();
        if include_diagonal {
            if s == 0.0 { 0.0 } else { (off + diag) / (s * s) }
        } else if s < 2.0 {
            0.0
        } else {
            off / (s * (s - 1.0))
        }
    }

    /// The `k` unordered pairs `i < j` with the largest MI, ties by index.
    pub fn top_pairs(&self, k: usize) -> Vec<MiPair> {
        if k == 0 {
            return Vec::new();
        }
        let s = self.keys.len();
        let per_row: Vec<Vec<(f64, usize, usize)>> = (0..s)
            .into_par_iter()
            .map(|i| {
                let mut best: Vec<(f64, usize, usize)> =
                    ((i + 1)..s).map(|j| (self.mi(i, j), i, j)).collect();
                best.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
                best.truncate(k);
                best
            })
            .collect();
        let mut all: Vec<(f64, usize, usize)> = per_row.into_iter().flatten().collect();
        all.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        all.truncate(k);
        all.into_iter()
            .map(|(mi, i, j)| MiPair {
                a: self.keys[i].clone(),
                b: self.keys[j].clone(),
                p_a: self.count(i) as f64 / self.n as f64,
                p_b: self.count(j) as f64 / self.n as f64,
                p_ab: self.co_count(i, j) as f64 / self.n as f64,
                mi,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiPair {
    pub a: SubstructureKey,
    pub b: SubstructureKey,
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    pub mi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiOptions {
    pub include_diagonal: bool,
    pub top_k: usize,
}

impl Default for MiOptions {
    fn default() -> Self {
        MiOptions {
            include_diagonal: true,
            top_k: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    pub sample_size: usize,
    /// The sample's substructure set S, in key order.
    pub keys: Vec<SubstructureKey>,
    /// p(s = 1) for each key of S.
    pub probabilities: Vec<f64>,
    pub include_diagonal: bool,
    pub ami: f64,
    pub top_pairs: Vec<MiPair>,
}

fn sample_bags(sample: &[&InstanceRecord], cfg: &SubstructureConfig) -> Vec<BTreeSet<SubstructureKey>> {
    let mut bags = Vec::with_capacity(sample.len());
    for_each_bag(sample.iter().copied(), cfg, |_, bag| bags.push(bag));
    bags
}

pub fn pairwise_mi(
    sample: &[&InstanceRecord],
    cfg: &SubstructureConfig,
    options: &MiOptions,
) -> Result<MiReport> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let co = CoOccurrence::from_bags(&sample_bags(sample, cfg));
    let n = co.num_instances() as f64;
    Ok(MiReport {
        sample_size: sample.len(),
        probabilities: (0..co.keys().len()).map(|i| co.count(i) as f64 / n).collect(),
        include_diagonal: options.include_diagonal,
        ami: co.ami(options.include_diagonal),
        top_pairs: co.top_pairs(options.top_k),
        keys: co.keys,
    })
}

pub fn ami(sample: &[&InstanceRecord], cfg: &SubstructureConfig, include_diagonal: bool) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(CoOccurrence::from_bags(&sample_bags(sample, cfg)).ami(include_diagonal))
}
