mod support;

use std::collections::HashSet;

use structdiv::grammar::gen_instances;
use structdiv::sampler::{sample_diverse, sample_random, ArgmaxStrategy, Preset, SamplerConfig};
use structdiv::{InstanceRecord, Lexer, PoolIndex, ToyGrammar};

fn toy_pool(n: usize, seed: u64) -> Vec<InstanceRecord> {
    gen_instances(&ToyGrammar::bundled(), n, seed, &Lexer::default()).unwrap()
}

#[test]
fn every_preset_replays_on_the_toy_pool() {
    let pool = toy_pool(300, 1);
    for preset in Preset::ALL {
        let Some(cfg) = preset.config(4, 120, 3) else { continue };
        let index = PoolIndex::build(&pool, &cfg.substructure).unwrap();
        let got = sample_diverse(&index, &cfg).unwrap();
        support::replay_greedy(&pool, &cfg, &got).unwrap_or_else(|e| panic!("{preset}: {e}"));
    }
}

#[test]
fn same_seed_same_trace() {
    let pool = toy_pool(500, 2);
    let cfg = Preset::SubtreeFreqnewt.config(4, 200, 9).unwrap();
    let index = PoolIndex::build(&pool, &cfg.substructure).unwrap();
    let a = sample_diverse(&index, &cfg).unwrap();
    assert_eq!(a, sample_diverse(&index, &cfg).unwrap());
    let other = sample_diverse(&index, &SamplerConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.ids(), other.ids());
}

#[test]
fn lazy_heap_matches_linear_scan() {
    let pool = toy_pool(800, 3);
    for preset in Preset::ALL {
        let Some(cfg) = preset.config(4, 800, 4) else { continue };
        let index = PoolIndex::build(&pool, &cfg.substructure).unwrap();
        let lazy = sample_diverse(&index, &cfg).unwrap();
        let linear = sample_diverse(
            &index,
            &SamplerConfig {
                argmax: ArgmaxStrategy::LinearScan,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(lazy.entries, linear.entries, "{preset}");
    }
}


#[test]
fn budget_larger_than_pool_drains_it() {
    let pool = toy_pool(150, 4);
    for preset in Preset::ALL {
        let ids: Vec<String> = match preset.config(4, 1000, 5) {
            Some(cfg) => {
                let index = PoolIndex::build(&pool, &cfg.substructure).unwrap();
                let got = sample_diverse(&index, &cfg).unwrap();
                got.ids().into_iter().map(String::from).collect()
            }
            None => sample_random(&pool, 1000, 5).ids().into_iter().map(String::from).collect(),
        };
        let distinct: HashSet<&String> = ids.iter().collect();
        assert_eq!((ids.len(), distinct.len()), (150, 150), "{preset}");
    }
}

#[test]
fn template_and_bigram_subsumption() {
    let pool = toy_pool(400, 5);
    for seed in 0..5 {
        let cfg = Preset::Template.config(4, 400, seed).unwrap();
        let index = PoolIndex::build(&pool, &cfg.substructure).unwrap();
        assert_eq!(support::template_repeats(&pool, &sample_diverse(&index, &cfg).unwrap()), 0);

        for preset in [Preset::Bigram, Preset::BigramFreq] {
            let cfg = preset.config(4, 400, seed).unwrap();
            let index = PoolIndex::build(&pool, &cfg.substructure).unwrap();
            let got = sample_diverse(&index, &cfg).unwrap();
            assert_eq!(support::bigram_repeats(&pool, &cfg, &got), 0, "{preset}");
        }
    }
}

#[test]
fn random_sampling_is_seeded() {
    let pool = toy_pool(100, 6);
    assert_eq!(sample_random(&pool, 30, 1), sample_random(&pool, 30, 1));
    assert_ne!(sample_random(&pool, 30, 1).ids(), sample_random(&pool, 30, 2).ids());
    assert!(sample_random(&pool, 0, 1).is_empty());
}

#[test]
fn mismatched_index_is_rejected() {
    let pool = toy_pool(20, 7);
    let cfg = Preset::Bigram.config(4, 5, 0).unwrap();
    let index = PoolIndex::build(&pool, &Preset::Template.config(4, 5, 0).unwrap().substructure).unwrap();
    assert!(sample_diverse(&index, &cfg).is_err());
}
