//! Greedy interleaved substructure/instance selection.
//!
//! Each iteration picks the live substructure `c` with the highest weight
//! `w_c`, then the live instance holding `c` with the highest weight `w_e`,
//! and moves that instance from the pool into the sample. Ties at the
//! maximum are broken uniformly at random: the tied candidates are ordered
//! by interned id and one index is drawn. Exactly one draw is made for the
//! substructure and one for the instance in every iteration, whatever the
//! number of candidates, so traces do not depend on how the argmax is found.
//!
//! The sampled-substructure set is cleared once every live substructure is in
//! it, and the sampled-template set once every live template is in it, so
//! long runs cycle through the pool repeatedly.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::PoolIndex;
use crate::instance::InstanceRecord;
use crate::rng::{stream, SeededRng};
use crate::substructure::{SubstructureConfig, SubstructureKey, SubstructureKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubstructureWeight {
    /// 1 if not yet sampled, else 0.
    UnseenUniform,
    /// Live pool frequency if not yet sampled, else 0.
    UnseenFreq,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceWeight {
    RandEx,
    RandNewT,
    FreqNewT,
}

/// What counts as a sampled substructure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampledSet {
    /// Only the substructure chosen in each iteration.
    Chosen,
    /// Every substructure of every sampled instance.
    Covered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ArgmaxStrategy {
    /// Max-heap over (weight, key) with lazy invalidation.
    #[default]
    LazyHeap,
    /// Full scan of the live substructures every iteration.
    LinearScan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub substructure: SubstructureConfig,
    pub substructure_weight: SubstructureWeight,
    pub instance_weight: InstanceWeight,
    pub sampled_set: SampledSet,
    pub budget: usize,
    pub seed: u64,
    #[serde(default)]
    pub argmax: ArgmaxStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    SubtreeRandex,
    SubtreeRandnewt,
    SubtreeFreqnewt,
    Template,
    TemplateFreq,
    Bigram,
    BigramFreq,
    Random,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::SubtreeRandex,
        Preset::SubtreeRandnewt,
        Preset::SubtreeFreqnewt,
        Preset::Template,
        Preset::TemplateFreq,
        Preset::Bigram,
        Preset::BigramFreq,
        Preset::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SubtreeRandex => "subtree-randex",
            Preset::SubtreeRandnewt => "subtree-randnewt",
            Preset::SubtreeFreqnewt => "subtree-freqnewt",
            Preset::Template => "template",
            Preset::TemplateFreq => "template-freq",
            Preset::Bigram => "bigram",
            Preset::BigramFreq => "bigram-freq",
            Preset::Random => "random",
        }
    }

    /// Sampler configuration for a diverse preset; `None` for `random`.
    pub fn config(self, d: usize, budget: usize, seed: u64) -> Option<SamplerConfig> {
        use InstanceWeight::*;
        use SubstructureKind as K;
        use SubstructureWeight::*;
        let (kind, wc, we, sampled_set) = match self {
            Preset::SubtreeRandex => (K::Subtree, UnseenFreq, RandEx, SampledSet::Chosen),
            Preset::SubtreeRandnewt => (K::Subtree, UnseenFreq, RandNewT, SampledSet::Chosen),
            Preset::SubtreeFreqnewt => (K::Subtree, UnseenFreq, FreqNewT, SampledSet::Chosen),
            Preset::Template => (K::Template, UnseenUniform, RandEx, SampledSet::Chosen),
            Preset::TemplateFreq => (K::Template, UnseenFreq, RandEx, SampledSet::Chosen),
            Preset::Bigram => (K::Bigram, UnseenUniform, RandEx, SampledSet::Covered),
            Preset::BigramFreq => (K::Bigram, UnseenFreq, RandEx, SampledSet::Covered),
            Preset::Random => return None,
        };
        Some(SamplerConfig {
            substructure: SubstructureConfig {
                kind,
                d,
                ..SubstructureConfig::default()
            },
            substructure_weight: wc,
            instance_weight: we,
            sampled_set,
            budget,
            seed,
            argmax: ArgmaxStrategy::default(),
        })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// `None` for random sampling, and for instances taken after every
    /// remaining instance has an empty bag.
    pub substructure: Option<SubstructureKey>,
    pub instance_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleResult {
    pub entries: Vec<TraceEntry>,
    /// `None` for the random baseline.
    pub config: Option<SamplerConfig>,
    pub seed: u64,
}

impl SampleResult {
    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.instance_id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// D_sample, C_sample and T_sample.
#[derive(Debug, Clone)]
pub struct SamplerState {
    pub sampled: Vec<u32>,
    sampled_key: Vec<bool>,
    sampled_template: Vec<bool>,
    unsampled_live_keys: usize,
    unsampled_live_templates: usize,
}

impl SamplerState {
    pub fn new(index: &PoolIndex) -> Self {
        SamplerState {
            sampled: Vec::new(),
            sampled_key: vec![false; index.num_keys()],
            sampled_template: vec![false; index.num_templates()],
            unsampled_live_keys: index.live_keys(),
            unsampled_live_templates: index.live_templates(),
        }
    }

    pub fn is_key_sampled(&self, key: u32) -> bool {
        self.sampled_key[key as usize]
    }

    pub fn is_template_sampled(&self, template: u32) -> bool {
        self.sampled_template[template as usize]
    }

    fn mark_key(&mut self, key: u32, index: &PoolIndex) {
        let slot = &mut self.sampled_key[key as usize];
        if !*slot {
            *slot = true;
            if index.is_key_live(key) {
                self.unsampled_live_keys -= 1;
            }
        }
    }

    fn mark_template(&mut self, template: u32, index: &PoolIndex) {
        let slot = &mut self.sampled_template[template as usize];
        if !*slot {
            *slot = true;
            if index.template_freq(template) > 0 {
                self.unsampled_live_templates -= 1;
            }
        }
    }
}

pub fn weight_substructure(
    scheme: SubstructureWeight,
    key: u32,
    index: &PoolIndex,
    state: &SamplerState,
) -> u64 {
    match scheme {
        SubstructureWeight::UnseenFreq if !state.is_key_sampled(key) => index.freq(key) as u64,
        SubstructureWeight::UnseenUniform if !state.is_key_sampled(key) => 1,
        SubstructureWeight::UnseenFreq | SubstructureWeight::UnseenUniform => 0,
        SubstructureWeight::Constant => 1,
    }
}

pub fn weight_instance(
    scheme: InstanceWeight,
    instance: u32,
    index: &PoolIndex,
    state: &SamplerState,
) -> u64 {
    let t = index.template_of(instance);
    match scheme {
        InstanceWeight::RandEx => 1,
        InstanceWeight::RandNewT => !state.is_template_sampled(t) as u64,
        InstanceWeight::FreqNewT if state.is_template_sampled(t) => 0,
        InstanceWeight::FreqNewT => index.template_freq(t) as u64,
    }
}

/// Argmax over the live substructure set.
trait KeyArgmax {
    /// Every live key with the maximum weight, ascending by id.
    fn ties(&mut self, index: &PoolIndex, state: &SamplerState, scheme: SubstructureWeight) -> Vec<u32>;
    /// Called after C_sample was cleared; weights may have gone up.
    fn reset(&mut self, index: &PoolIndex, state: &SamplerState, scheme: SubstructureWeight);
}

struct LinearScan;

impl KeyArgmax for LinearScan {
    fn ties(&mut self, index: &PoolIndex, state: &SamplerState, scheme: SubstructureWeight) -> Vec<u32> {
        let mut best = 0u64;
        let mut ties = Vec::new();
        for k in index.live_key_ids() {
            let w = weight_substructure(scheme, k, index, state);
            if ties.is_empty() || w > best {
                best = w;
                ties.clear();
                ties.push(k);
            } else if w == best {
                ties.push(k);
            }
        }
        ties
    }

    fn reset(&mut self, _: &PoolIndex, _: &SamplerState, _: SubstructureWeight) {}
}

/// Holds exactly one entry per live key whose weight is never below the
/// key's current weight: between resets weights only fall, because live
/// frequencies only shrink and the sampled set only grows.
struct LazyHeap {
    heap: BinaryHeap<(u64, Reverse<u32>)>,
}

impl LazyHeap {
    fn new(index: &PoolIndex, state: &SamplerState, scheme: SubstructureWeight) -> Self {
        let mut heap = LazyHeap {
            heap: BinaryHeap::new(),
        };
        heap.reset(index, state, scheme);
        heap
    }
}

impl KeyArgmax for LazyHeap {
    fn ties(&mut self, index: &PoolIndex, state: &SamplerState, scheme: SubstructureWeight) -> Vec<u32> {
        let mut ties = Vec::new();
        let mut best = None;
        while let Some(&(w, Reverse(k))) = self.heap.peek() {
            if best.is_some_and(|b| w < b) {
                break;
            }
            self.heap.pop();
            if !index.is_key_live(k) {
                continue;
            }
            let current = weight_substructure(scheme, k, index, state);
            debug_assert!(current <= w, "stale heap entry below current weight");
            if current != w {
                self.heap.push((current, Reverse(k)));
                continue;
            }
            best = Some(w);
            ties.push(k);
        }
        if let Some(w) = best {
            self.heap.extend(ties.iter().map(|&k| (w, Reverse(k))));
        }
        ties.sort_unstable();
        ties
    }

    fn reset(&mut self, index: &PoolIndex, state: &SamplerState, scheme: SubstructureWeight) {
        self.heap = index
            .live_key_ids()
            .map(|k| (weight_substructure(scheme, k, index, state), Reverse(k)))
            .collect();
    }
}

/// Run the greedy loop on a copy of `index`.
pub fn sample_diverse(index: &PoolIndex, cfg: &SamplerConfig) -> Result<SampleResult> {
    let mut sampler = Sampler::new(index.clone(), *cfg)?;
    while sampler.step().is_some() {}
    Ok(sampler.into_result())
}

/// Step-wise access to the greedy loop.
pub struct Sampler {
    index: PoolIndex,
    cfg: SamplerConfig,
    state: SamplerState,
    rng: SeededRng,
    argmax: Box<dyn KeyArgmax + Send>,
    entries: Vec<TraceEntry>,
}

/// How often debug builds recount the live frequencies.
#[cfg(debug_assertions)]
const FRESHNESS_CHECK_EVERY: usize = 64;

impl Sampler {
    pub fn new(index: PoolIndex, cfg: SamplerConfig) -> Result<Self> {
        let built = index.config();
        let matches = built.kind == cfg.substructure.kind
            && match built.kind {
                SubstructureKind::Subtree => built.d == cfg.substructure.d,
                SubstructureKind::Ngram => built.n_max == cfg.substructure.n_max,
                _ => true,
            };
        if !matches {
            return Err(Error::Config(format!(
                "index was built for {:?} but the sampler expects {:?}",
                built, cfg.substructure
            )));
        }
        let state = SamplerState::new(&index);
        let argmax: Box<dyn KeyArgmax + Send> = match cfg.argmax {
            ArgmaxStrategy::LazyHeap => Box::new(LazyHeap::new(&index, &state, cfg.substructure_weight)),
            ArgmaxStrategy::LinearScan => Box::new(LinearScan),
        };
        Ok(Sampler {
            rng: SeededRng::new(cfg.seed, stream::SAMPLE_DIVERSE),
            index,
            cfg,
            state,
            argmax,
            entries: Vec::new(),
        })
    }

    pub fn index(&self) -> &PoolIndex {
        &self.index
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    /// One iteration; `None` once the budget is spent or the pool is empty.
    pub fn step(&mut self) -> Option<&TraceEntry> {
        if self.entries.len() >= self.cfg.budget || self.index.live_instances() == 0 {
            return None;
        }
        let (chosen_key, instance) = if self.index.live_keys() > 0 {
            let ties = self.argmax.ties(&self.index, &self.state, self.cfg.substructure_weight);
            let c = ties[self.rng.index(ties.len())];
            let e = self.pick_instance(c);
            (Some(c), e)
        } else {
            // every remaining instance has an empty bag
            let live: Vec<u32> = self.index.live_instance_ids().collect();
            self.rng.next_u64();
            (None, live[self.rng.index(live.len())])
        };
        self.take(chosen_key, instance);
        self.entries.last()
    }

    fn pick_instance(&mut self, c: u32) -> u32 {
        let scheme = self.cfg.instance_weight;
        let mut best = 0u64;
        let mut ties: Vec<u32> = Vec::new();
        for e in self.index.live_holders(c) {
            let w = weight_instance(scheme, e, &self.index, &self.state);
            if ties.is_empty() || w > best {
                best = w;
                ties.clear();
                ties.push(e);
            } else if w == best {
                ties.push(e);
            }
        }
        ties[self.rng.index(ties.len())]
    }

    fn take(&mut self, c: Option<u32>, e: u32) {
        let state = &mut self.state;
        let sampled_key = &state.sampled_key;
        let sampled_template = &state.sampled_template;
        let mut keys_lost = 0;
        let mut templates_lost = 0;
        self.index.remove(
            e,
            |k| keys_lost += !sampled_key[k as usize] as usize,
            |t| templates_lost += !sampled_template[t as usize] as usize,
        );
        state.unsampled_live_keys -= keys_lost;
        state.unsampled_live_templates -= templates_lost;
        state.sampled.push(e);

        match (self.cfg.sampled_set, c) {
            (SampledSet::Covered, _) => {
                for i in 0..self.index.bag(e).len() {
                    let k = self.index.bag(e)[i];
                    state.mark_key(k, &self.index);
                }
            }
            (SampledSet::Chosen, Some(c)) => state.mark_key(c, &self.index),
            (SampledSet::Chosen, None) => {}
        }
        state.mark_template(self.index.template_of(e), &self.index);

        if state.unsampled_live_keys == 0 && self.index.live_keys() > 0 {
            state.sampled_key.iter_mut().for_each(|s| *s = false);
            state.unsampled_live_keys = self.index.live_keys();
            self.argmax.reset(&self.index, state, self.cfg.substructure_weight);
        }
        if state.unsampled_live_templates == 0 && self.index.live_templates() > 0 {
            state.sampled_template.iter_mut().for_each(|s| *s = false);
            state.unsampled_live_templates = self.index.live_templates();
        }

        #[cfg(debug_assertions)]
        if self.entries.len() % FRESHNESS_CHECK_EVERY == 0 {
            if let Err(msg) = self.index.check_consistency() {
                panic!("pool index out of date: {msg}");
            }
        }

        self.entries.push(TraceEntry {
            iteration: self.entries.len(),
            substructure: c.map(|c| self.index.key(c).clone()),
            instance_id: self.index.id(e).to_string(),
        });
    }

    pub fn into_result(self) -> SampleResult {
        SampleResult {
            entries: self.entries,
            config: Some(self.cfg),
            seed: self.cfg.seed,
        }
    }
}

/// Uniform sample without replacement of `min(budget, |pool|)` instances.
pub fn sample_random(pool: &[InstanceRecord], budget: usize, seed: u64) -> SampleResult {
    let ids: Vec<&str> = pool.iter().map(|r| r.id.as_str()).collect();
    sample_random_ids(&ids, budget, seed)
}

pub fn sample_random_ids(ids: &[&str], budget: usize, seed: u64) -> SampleResult {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    let k = budget.min(ids.len());
    SeededRng::new(seed, stream::SAMPLE_RANDOM).partial_shuffle(&mut order, k);
    SampleResult {
        entries: order[..k]
            .iter()
            .enumerate()
            .map(|(iteration, &i)| TraceEntry {
                iteration,
                substructure: None,
                instance_id: ids[i].to_string(),
            })
            .collect(),
        config: None,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::TemplateKey;
    use std::collections::BTreeSet;

    fn tmpl_pool(templates: &[&str]) -> PoolIndex {
        PoolIndex::from_bags(
            SubstructureConfig::of_kind(SubstructureKind::Template),
            templates.iter().enumerate().map(|(i, t)| {
                (
                    format!("e{i}"),
                    TemplateKey(t.to_string()),
                    BTreeSet::from([SubstructureKey::new(SubstructureKind::Template, *t)]),
                )
            }),
        )
        .unwrap()
    }

    #[test]
    fn substructure_weights() {
        let idx = tmpl_pool(&["t1", "t1", "t2"]);
        let mut state = SamplerState::new(&idx);
        assert_eq!(weight_substructure(SubstructureWeight::UnseenFreq, 0, &idx, &state), 2);
        assert_eq!(weight_substructure(SubstructureWeight::UnseenUniform, 0, &idx, &state), 1);
        state.mark_key(0, &idx);
        assert_eq!(weight_substructure(SubstructureWeight::UnseenFreq, 0, &idx, &state), 0);
        assert_eq!(weight_substructure(SubstructureWeight::UnseenUniform, 0, &idx, &state), 0);
        assert_eq!(weight_substructure(SubstructureWeight::Constant, 0, &idx, &state), 1);
    }

    #[test]
    fn unseen_freq_reports_live_frequency() {
        let idx = tmpl_pool(&["t"; 7]);
        let state = SamplerState::new(&idx);
        assert_eq!(weight_substructure(SubstructureWeight::UnseenFreq, 0, &idx, &state), 7);
    }

    #[test]
    fn instance_weights() {
        let idx = tmpl_pool(&["a", "a", "a", "a", "a", "b"]);
        let mut state = SamplerState::new(&idx);
        assert_eq!(weight_instance(InstanceWeight::RandEx, 0, &idx, &state), 1);
        assert_eq!(weight_instance(InstanceWeight::FreqNewT, 0, &idx, &state), 5);
        assert_eq!(weight_instance(InstanceWeight::RandNewT, 0, &idx, &state), 1);
        state.mark_template(0, &idx);
        assert_eq!(weight_instance(InstanceWeight::RandNewT, 0, &idx, &state), 0);
        assert_eq!(weight_instance(InstanceWeight::FreqNewT, 0, &idx, &state), 0);
        assert_eq!(weight_instance(InstanceWeight::FreqNewT, 5, &idx, &state), 1);
    }

    #[test]
    fn zero_budget_and_exhaustion() {
        let idx = tmpl_pool(&["a", "b", "a"]);
        let cfg = Preset::TemplateFreq.config(4, 0, 1).unwrap();
        assert!(sample_diverse(&idx, &cfg).unwrap().is_empty());
        for preset in [Preset::Template, Preset::TemplateFreq] {
            let cfg = preset.config(4, 10, 1).unwrap();
            let res = sample_diverse(&idx, &cfg).unwrap();
            let ids: BTreeSet<&str> = res.ids().into_iter().collect();
            assert_eq!(ids.len(), 3);
        }
    }

    #[test]
    fn template_freq_starts_with_most_frequent() {
        let idx = tmpl_pool(&["t1", "t1", "t2", "t3"]);
        for seed in 0..20 {
            let cfg = Preset::TemplateFreq.config(4, 3, seed).unwrap();
            let res = sample_diverse(&idx, &cfg).unwrap();
            let first = res.entries[0].substructure.as_ref().unwrap();
            assert_eq!(first.key, "t1");
            let covered: BTreeSet<&str> = res
                .entries
                .iter()
                .map(|e| e.substructure.as_ref().unwrap().key.as_str())
                .collect();
            assert_eq!(covered, BTreeSet::from(["t1", "t2", "t3"]));
        }
    }

    #[test]
    fn mismatched_index_rejected() {
        let idx = tmpl_pool(&["a"]);
        let cfg = Preset::Bigram.config(4, 1, 0).unwrap();
        assert!(matches!(sample_diverse(&idx, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn empty_bags_still_sampled() {
        let idx = PoolIndex::from_bags(
            SubstructureConfig::of_kind(SubstructureKind::Bigram),
            vec![
                ("x".to_string(), TemplateKey("x".into()), BTreeSet::new()),
                (
                    "y".to_string(),
                    TemplateKey("y".into()),
                    BTreeSet::from([SubstructureKey::new(SubstructureKind::Bigram, "PC(f,a)")]),
                ),
            ],
        )
        .unwrap();
        let res = sample_diverse(&idx, &Preset::Bigram.config(4, 5, 3).unwrap()).unwrap();
        assert_eq!(res.ids(), ["y", "x"]);
        assert!(res.entries[1].substructure.is_none());
    }

    #[test]
    fn random_baseline() {
        let ids: Vec<String> = (0..50).map(|i| i.to_string()).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        assert!(sample_random_ids(&refs, 0, 1).is_empty());
        let all = sample_random_ids(&refs, 80, 1);
        assert_eq!(all.ids().into_iter().collect::<BTreeSet<_>>().len(), 50);
        assert_eq!(sample_random_ids(&refs, 10, 9), sample_random_ids(&refs, 10, 9));
        assert_ne!(sample_random_ids(&refs, 10, 9).ids(), sample_random_ids(&refs, 10, 10).ids());
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("subtree".parse::<Preset>().is_err());
    }
}
