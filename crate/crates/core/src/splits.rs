//! Pool/test splits: IID, template (compositional) and subtree (diverse test).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::PoolIndex;
use crate::instance::InstanceRecord;
use crate::rng::{stream, SeededRng};
use crate::sampler::{sample_diverse, Preset};
use crate::substructure::SubstructureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitKind {
    Iid,
    Template,
    Subtree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestSize {
    Count(usize),
    Fraction(f64),
}

impl TestSize {
    /// Number of test instances for a dataset of `n`; fractions round half up.
    pub fn resolve(self, n: usize) -> Result<usize> {
        match self {
            TestSize::Count(k) => Ok(k),
            TestSize::Fraction(f) if f > 0.0 && f < 1.0 => Ok((f * n as f64 + 0.5).floor() as usize),
            TestSize::Fraction(f) => Err(Error::Config(format!(
                "test fraction must lie in (0, 1), got {f}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub test_size: TestSize,
    pub seed: u64,
    pub max_repair_rounds: usize,
}

impl SplitSpec {
    pub fn new(kind: SplitKind, test_size: TestSize, seed: u64) -> Self {
        SplitSpec {
            kind,
            test_size,
            seed,
            max_repair_rounds: 50,
        }
    }
}

/// Ids on each side, both in dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub pool: Vec<String>,
    pub test: Vec<String>,
    pub spec: SplitSpec,
}

impl Split {
    fn from_mask(dataset: &[InstanceRecord], in_test: &[bool], spec: SplitSpec) -> Split {
        let mut pool = Vec::new();
        let mut test = Vec::new();
        for (rec, &t) in dataset.iter().zip(in_test) {
            if t {
                test.push(rec.id.clone());
            } else {
                pool.push(rec.id.clone());
            }
        }
        Split { pool, test, spec }
    }
}

pub fn split(dataset: &[InstanceRecord], spec: &SplitSpec) -> Result<Split> {
    match spec.kind {
        SplitKind::Iid => split_iid(dataset, spec),
        SplitKind::Template => split_template(dataset, spec),
        SplitKind::Subtree => split_subtree(dataset, spec),
    }
}

fn checked_size(dataset: &[InstanceRecord], spec: &SplitSpec) -> Result<usize> {
    let k = spec.test_size.resolve(dataset.len())?;
    if k > 0 && k >= dataset.len() {
        return Err(Error::TestTooLarge {
            requested: k,
            available: dataset.len(),
        });
    }
    Ok(k)
}

pub fn split_iid(dataset: &[InstanceRecord], spec: &SplitSpec) -> Result<Split> {
    let k = checked_size(dataset, spec)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    SeededRng::new(spec.seed, stream::SPLIT_IID).partial_shuffle(&mut order, k);
    let mut in_test = vec![false; dataset.len()];
    for &i in &order[..k] {
        in_test[i] = true;
    }
    Ok(Split::from_mask(dataset, &in_test, *spec))
}

/// Hold out whole templates, then repair: any held-out template using a
/// program token that the pool lacks moves to the pool, until nothing moves.
/// An attempt that ends with an empty test side is retried on the next
/// random stream.
pub fn split_template(dataset: &[InstanceRecord], spec: &SplitSpec) -> Result<Split> {
    let k = checked_size(dataset, spec)?;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of: HashMap<&str, usize> = HashMap::new();
    for (i, rec) in dataset.iter().enumerate() {
        let g = *group_of.entry(rec.template.as_str()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    if k == 0 {
        return Ok(Split::from_mask(dataset, &vec![false; dataset.len()], *spec));
    }
    if groups.len() < 2 {
        return Err(Error::UnsatisfiableSplit(0));
    }
    let vocab: Vec<BTreeSet<&str>> = groups
        .iter()
        .map(|members| {
            members
                .iter()
                .flat_map(|&i| dataset[i].program_vocabulary())
                .collect()
        })
        .collect();

    for attempt in 0..spec.max_repair_rounds {
        let mut rng = SeededRng::new(spec.seed, stream::SPLIT_TEMPLATE + attempt as u64);
        let mut order: Vec<usize> = (0..groups.len()).collect();
        rng.shuffle(&mut order);

        let mut held_out = vec![false; groups.len()];
        let mut count = 0;
        for &g in &order[..groups.len() - 1] {
            if count >= k {
                break;
            }
            held_out[g] = true;
            count += groups[g].len();
        }

        let mut pool_vocab: HashSet<&str> = HashSet::new();
        for g in (0..groups.len()).filter(|&g| !held_out[g]) {
            pool_vocab.extend(vocab[g].iter().copied());
        }
        loop {
            let violators: Vec<usize> = (0..groups.len())
                .filter(|&g| held_out[g] && vocab[g].iter().any(|t| !pool_vocab.contains(t)))
                .collect();
            if violators.is_empty() {
                break;
            }
            for g in violators {
                held_out[g] = false;
                pool_vocab.extend(vocab[g].iter().copied());
            }
        }

        if held_out.iter().any(|&h| h) {
            let mut in_test = vec![false; dataset.len()];
            for g in (0..groups.len()).filter(|&g| held_out[g]) {
                for &i in &groups[g] {
                    in_test[i] = true;
                }
            }
            return Ok(Split::from_mask(dataset, &in_test, *spec));
        }
    }
    Err(Error::UnsatisfiableSplit(spec.max_repair_rounds))
}

/// Choose the test set with the subtree-freqnewt sampler (d = 4) run over the
/// whole dataset.
pub fn split_subtree(dataset: &[InstanceRecord], spec: &SplitSpec) -> Result<Split> {
    let k = checked_size(dataset, spec)?;
    let cfg = Preset::SubtreeFreqnewt
        .config(4, k, spec.seed)
        .expect("diverse preset");
    let index = PoolIndex::build(dataset, &SubstructureConfig { d: 4, ..cfg.substructure })?;
    let sample = sample_diverse(&index, &cfg)?;
    let chosen: HashSet<&str> = sample.ids().into_iter().collect();
    let in_test: Vec<bool> = dataset.iter().map(|r| chosen.contains(r.id.as_str())).collect();
    Ok(Split::from_mask(dataset, &in_test, *spec))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvabilityReport {
    pub solvable: bool,
    /// Test tokens absent from the pool, with the test ids that use them.
    pub missing: BTreeMap<String, Vec<String>>,
}

/// A split is solvable when every program token of the test side also occurs
/// on the pool side.
pub fn check_solvable(dataset: &[InstanceRecord], split: &Split) -> Result<SolvabilityReport> {
    let by_id: HashMap<&str, &InstanceRecord> =
        dataset.iter().map(|r| (r.id.as_str(), r)).collect();
    let lookup = |id: &String| {
        by_id
            .get(id.as_str())
            .copied()
            .ok_or_else(|| Error::UnknownId(id.clone()))
    };
    let mut pool_vocab: HashSet<&str> = HashSet::new();
    for id in &split.pool {
        pool_vocab.extend(lookup(id)?.program_vocabulary());
    }
    let mut missing: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for id in &split.test {
        for tok in lookup(id)?.program_vocabulary() {
            if !pool_vocab.contains(tok) {
                missing.entry(tok.to_string()).or_default().push(id.clone());
            }
        }
    }
    Ok(SolvabilityReport {
        solvable: missing.is_empty(),
        missing,
    })
}
