//! Inverted index from substructures to the pool instances holding them,
//! with live frequency counts that follow instance removals.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::InstanceRecord;
use crate::lexer::TemplateKey;
use crate::substructure::{bag_keys, SubstructureConfig, SubstructureKey};

const BUILD_CHUNK: usize = 4096;

/// Compressed rows: `row(i)` is `data[offsets[i]..offsets[i + 1]]`.
#[derive(Debug, Clone, Default)]
struct Rows {
    offsets: Vec<usize>,
    data: Vec<u32>,
}

impl Rows {
    fn new() -> Self {
        Rows {
            offsets: vec![0],
            data: Vec::new(),
        }
    }

    fn push_row(&mut self, row: impl IntoIterator<Item = u32>) {
        self.data.extend(row);
        self.offsets.push(self.data.len());
    }

    fn row(&self, i: usize) -> &[u32] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Transpose of a row set whose entries are `< columns`. Rows of the
    /// result are ascending.
    fn transpose(&self, columns: usize) -> Rows {
        let mut counts = vec![0usize; columns + 1];
        for &c in &self.data {
            counts[c as usize + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut data = vec![0u32; self.data.len()];
        for r in 0..self.len() {
            for &c in self.row(r) {
                data[cursor[c as usize]] = r as u32;
                cursor[c as usize] += 1;
            }
        }
        Rows { offsets, data }
    }
}

/// Pool state for diverse sampling.
///
/// Instances, substructure keys and templates are interned to dense ids in
/// order of first appearance, so the numbering depends only on pool order.
#[derive(Debug, Clone)]
pub struct PoolIndex {
    config: SubstructureConfig,
    ids: Vec<String>,
    id_lookup: HashMap<String, u32>,
    alive: Vec<bool>,
    live_instances: usize,

    keys: Vec<SubstructureKey>,
    bags: Rows,
    holders: Rows,
    freq: Vec<u32>,
    live_keys: usize,

    templates: Vec<TemplateKey>,
    instance_template: Vec<u32>,
    template_freq: Vec<u32>,
    live_templates: usize,
}

impl PoolIndex {
    /// Index `pool` under `config`. Bags are extracted in parallel chunks and
    /// interned sequentially, so the result does not depend on scheduling.
    pub fn build(pool: &[InstanceRecord], config: &SubstructureConfig) -> Result<Self> {
        config.validate()?;
        let mut builder = Builder::new(*config);
        for chunk in pool.chunks(BUILD_CHUNK) {
            let bags: Vec<BTreeSet<SubstructureKey>> =
                chunk.par_iter().map(|r| bag_keys(r, config)).collect();
            for (record, bag) in chunk.iter().zip(bags) {
                builder.add(&record.id, &record.template, bag)?;
            }
        }
        Ok(builder.finish())
    }

    /// Index precomputed bags given as `(id, template, keys)`.
    pub fn from_bags<I>(config: SubstructureConfig, bags: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, TemplateKey, BTreeSet<SubstructureKey>)>,
    {
        let mut builder = Builder::new(config);
        for (id, template, keys) in bags {
            builder.add(&id, &template, keys)?;
        }
        Ok(builder.finish())
    }

    pub fn config(&self) -> &SubstructureConfig {
        &self.config
    }

    pub fn num_instances(&self) -> usize {
        self.ids.len()
    }

    pub fn num_keys(&self) -> usize {
        self.keys.len()
    }

    pub fn num_templates(&self) -> usize {
        self.templates.len()
    }

    pub fn live_instances(&self) -> usize {
        self.live_instances
    }

    /// Size of the live substructure set C.
    pub fn live_keys(&self) -> usize {
        self.live_keys
    }

    pub fn live_templates(&self) -> usize {
        self.live_templates
    }

    pub fn id(&self, instance: u32) -> &str {
        &self.ids[instance as usize]
    }

    pub fn instance_of(&self, id: &str) -> Option<u32> {
        self.id_lookup.get(id).copied()
    }

    pub fn is_live(&self, instance: u32) -> bool {
        self.alive[instance as usize]
    }

    pub fn key(&self, key: u32) -> &SubstructureKey {
        &self.keys[key as usize]
    }

    pub fn key_id(&self, key: &SubstructureKey) -> Option<u32> {
        // linear: only used by tests and reporting
        self.keys.iter().position(|k| k == key).map(|i| i as u32)
    }

    /// Live frequency F_pool(c).
    pub fn freq(&self, key: u32) -> u32 {
        self.freq[key as usize]
    }

    pub fn freq_of(&self, key: &SubstructureKey) -> u32 {
        self.key_id(key).map_or(0, |k| self.freq(k))
    }

    pub fn is_key_live(&self, key: u32) -> bool {
        self.freq[key as usize] > 0
    }

    /// Sorted key ids of an instance's bag.
    pub fn bag(&self, instance: u32) -> &[u32] {
        self.bags.row(instance as usize)
    }

    /// Every instance that ever held `key`, ascending; filter with `is_live`.
    pub fn all_holders(&self, key: u32) -> &[u32] {
        self.holders.row(key as usize)
    }

    pub fn live_holders(&self, key: u32) -> impl Iterator<Item = u32> + '_ {
        self.all_holders(key)
            .iter()
            .copied()
            .filter(|&e| self.alive[e as usize])
    }

    pub fn live_key_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.keys.len() as u32).filter(|&k| self.freq[k as usize] > 0)
    }

    pub fn live_instance_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.ids.len() as u32).filter(|&e| self.alive[e as usize])
    }

    pub fn template_of(&self, instance: u32) -> u32 {
        self.instance_template[instance as usize]
    }

    pub fn template(&self, template: u32) -> &TemplateKey {
        &self.templates[template as usize]
    }

    /// Live template frequency F_pool(t).
    pub fn template_freq(&self, template: u32) -> u32 {
        self.template_freq[template as usize]
    }

    /// Remove a live instance by id.
    pub fn remove_instance(&mut self, id: &str) -> Result<()> {
        match self.instance_of(id) {
            Some(e) if self.alive[e as usize] => {
                self.remove(e, |_| {}, |_| {});
                Ok(())
            }
            _ => Err(Error::UnknownId(id.to_string())),
        }
    }

    /// Remove live instance `e`, reporting keys and templates whose live
    /// frequency drops to zero.
    pub(crate) fn remove(
        &mut self,
        e: u32,
        mut key_died: impl FnMut(u32),
        mut template_died: impl FnMut(u32),
    ) {
        debug_assert!(self.alive[e as usize]);
        self.alive[e as usize] = false;
        self.live_instances -= 1;
        let (start, end) = (self.bags.offsets[e as usize], self.bags.offsets[e as usize + 1]);
        for &k in &self.bags.data[start..end] {
            let f = &mut self.freq[k as usize];
            *f -= 1;
            if *f == 0 {
                self.live_keys -= 1;
                key_died(k);
            }
        }
        let t = self.instance_template[e as usize];
        let f = &mut self.template_freq[t as usize];
        *f -= 1;
        if *f == 0 {
            self.live_templates -= 1;
            template_died(t);
        }
    }

    /// Recount every live frequency from scratch and compare with the
    /// incrementally maintained values.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        let mut freq = vec![0u32; self.keys.len()];
        let mut tfreq = vec![0u32; self.templates.len()];
        for e in self.live_instance_ids() {
            for &k in self.bag(e) {
                freq[k as usize] += 1;
            }
            tfreq[self.template_of(e) as usize] += 1;
        }
        if let Some(k) = (0..freq.len()).find(|&k| freq[k] != self.freq[k]) {
            return Err(format!(
                "key {} has live frequency {} but recount gives {}",
                self.keys[k], self.freq[k], freq[k]
            ));
        }
        if let Some(t) = (0..tfreq.len()).find(|&t| tfreq[t] != self.template_freq[t]) {
            return Err(format!("template {} frequency drifted", self.templates[t]));
        }
        let live_keys = freq.iter().filter(|&&f| f > 0).count();
        let live_templates = tfreq.iter().filter(|&&f| f > 0).count();
        let live_instances = self.alive.iter().filter(|&&a| a).count();
        if live_keys != self.live_keys
            || live_templates != self.live_templates
            || live_instances != self.live_instances
        {
            return Err("live counters drifted".into());
        }
        Ok(())
    }
}

struct Builder {
    config: SubstructureConfig,
    ids: Vec<String>,
    id_lookup: HashMap<String, u32>,
    keys: Vec<SubstructureKey>,
    key_lookup: HashMap<SubstructureKey, u32>,
    bags: Rows,
    templates: Vec<TemplateKey>,
    template_lookup: HashMap<TemplateKey, u32>,
    instance_template: Vec<u32>,
}

impl Builder {
    fn new(config: SubstructureConfig) -> Self {
        Builder {
            config,
            ids: Vec::new(),
            id_lookup: HashMap::new(),
            keys: Vec::new(),
            key_lookup: HashMap::new(),
            bags: Rows::new(),
            templates: Vec::new(),
            template_lookup: HashMap::new(),
            instance_template: Vec::new(),
        }
    }

    fn add(
        &mut self,
        id: &str,
        template: &TemplateKey,
        keys: BTreeSet<SubstructureKey>,
    ) -> Result<()> {
        if self.id_lookup.contains_key(id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
        let e = self.ids.len() as u32;
        self.id_lookup.insert(id.to_string(), e);
        self.ids.push(id.to_string());

        let mut row: Vec<u32> = keys
            .into_iter()
            .map(|k| match self.key_lookup.get(&k) {
                Some(&id) => id,
                None => {
                    let id = self.keys.len() as u32;
                    self.keys.push(k.clone());
                    self.key_lookup.insert(k, id);
                    id
                }
            })
            .collect();
        row.sort_unstable();
        self.bags.push_row(row);

        let t = match self.template_lookup.get(template) {
            Some(&t) => t,
            None => {
                let t = self.templates.len() as u32;
                self.templates.push(template.clone());
                self.template_lookup.insert(template.clone(), t);
                t
            }
        };
        self.instance_template.push(t);
        Ok(())
    }

    fn finish(self) -> PoolIndex {
        let holders = self.bags.transpose(self.keys.len());
        let freq: Vec<u32> = (0..self.keys.len())
            .map(|k| holders.row(k).len() as u32)
            .collect();
        let mut template_freq = vec![0u32; self.templates.len()];
        for &t in &self.instance_template {
            template_freq[t as usize] += 1;
        }
        let n = self.ids.len();
        PoolIndex {
            config: self.config,
            ids: self.ids,
            id_lookup: self.id_lookup,
            alive: vec![true; n],
            live_instances: n,
            live_keys: self.keys.len(),
            keys: self.keys,
            bags: self.bags,
            holders,
            freq,
            live_templates: self.templates.len(),
            templates: self.templates,
            instance_template: self.instance_template,
            template_freq,
        }
    }
}

pub fn build_index(pool: &[InstanceRecord], config: &SubstructureConfig) -> Result<PoolIndex> {
    PoolIndex::build(pool, config)
}
