mod support;

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use structdiv::analysis::{fractional_ranks, FrequencyTable};
use structdiv::dataset::filter_frequency_cap;
use structdiv::lexer::{FunctionRule, LexerConfig, TokenClass};
use structdiv::sampler::{sample_diverse, ArgmaxStrategy, Preset};
use structdiv::substructure::{enumerate_subtrees, SubstructureKey};
use structdiv::{build_ast, InstanceRecord, Lexer, PoolIndex};

#[derive(Debug, Clone)]
enum Term {
    Leaf(String),
    Call(String, Vec<Term>),
}

impl Term {
    fn functional(&self) -> String {
        match self {
            Term::Leaf(l) => l.clone(),
            Term::Call(f, args) => {
                let args: Vec<String> = args.iter().map(Term::functional).collect();
                format!("{f} ( {} )", args.join(" , "))
            }
        }
    }

    fn sexpr(&self) -> String {
        match self {
            Term::Leaf(l) => l.clone(),
            Term::Call(f, args) => {
                let args: Vec<String> = args.iter().map(Term::sexpr).collect();
                format!("( {f} {} )", args.join(" "))
            }
        }
    }
}

fn leaf_label() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[a-z][a-z0-9_]{0,3}",
        2 => "[0-9]{1,3}",
        1 => "\"[a-z ]{0,5}\"",
    ]
}

fn term() -> impl Strategy<Value = Term> {
    leaf_label().prop_map(Term::Leaf).prop_recursive(4, 24, 4, |inner| {
        ("[a-z][a-z_]{0,4}", prop::collection::vec(inner, 1..4)).prop_map(|(f, args)| Term::Call(f, args))
    })
}

fn group_head_lexer() -> Lexer {
    LexerConfig {
        function_rule: FunctionRule::GroupHead,
        ..LexerConfig::default()
    }
    .compile()
    .unwrap()
}

fn parse_raw(program: &str, lexer: &Lexer) -> structdiv::Ast {
    build_ast(&lexer.tokenize(program).unwrap(), lexer).unwrap()
}

fn record(id: usize, program: &str, lexer: &Lexer) -> InstanceRecord {
    InstanceRecord::parse(&format!("i{id}"), "u", program, lexer).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn functional_round_trip(t in term()) {
        let lexer = Lexer::default();
        let program = t.functional();
        let ast = parse_raw(&program, &lexer);
        prop_assert_eq!(ast.to_program(&lexer), program.clone());
        let again = parse_raw(&ast.to_program(&lexer), &lexer);
        prop_assert_eq!(enumerate_subtrees(&again, 4), enumerate_subtrees(&ast, 4));
    }

    #[test]
    fn sexpr_round_trip(t in term()) {
        let lexer = group_head_lexer();
        let program = t.sexpr();
        let ast = parse_raw(&program, &lexer);
        prop_assert_eq!(ast.to_program(&lexer), program);
        // both syntaxes give the same labeled tree
        let functional = parse_raw(&t.functional(), &Lexer::default());
        prop_assert_eq!(enumerate_subtrees(&ast, 5), enumerate_subtrees(&functional, 5));
    }

    #[test]
    fn anonymization_is_idempotent(t in term()) {
        let lexer = Lexer::default();
        let once = lexer.anonymize(&t.functional()).unwrap();
        prop_assert_eq!(lexer.anonymize(once.as_str()).unwrap(), once);
    }

    #[test]
    fn one_node_per_non_structural_token(t in term(), sexpr in any::<bool>()) {
        let (lexer, program) = if sexpr {
            (group_head_lexer(), t.sexpr())
        } else {
            (Lexer::default(), t.functional())
        };
        let tokens = lexer.tokenize(&program).unwrap();
        let content = tokens.iter().filter(|t| t.class != TokenClass::Structural).count();
        prop_assert_eq!(build_ast(&tokens, &lexer).unwrap().len(), content);
    }

    #[test]
    fn subtrees_grow_with_d(t in term()) {
        let ast = parse_raw(&t.functional(), &Lexer::default());
        let mut previous = BTreeSet::new();
        for d in 1..=6 {
            let current = enumerate_subtrees(&ast, d);
            prop_assert!(previous.is_subset(&current));
            previous = current;
        }
    }

    #[test]
    fn single_node_subtrees_are_labels(t in term()) {
        let ast = parse_raw(&t.functional(), &Lexer::default());
        let labels: BTreeSet<&str> = ast.nodes().iter().map(|n| n.label.as_str()).collect();
        prop_assert_eq!(enumerate_subtrees(&ast, 1).len(), labels.len());
    }

    #[test]
    fn ranks_sum_to_triangular_number(freqs in prop::collection::vec(1usize..20, 1..60)) {
        let table = FrequencyTable(
            freqs.iter().enumerate().map(|(i, &f)| (SubstructureKey::subtree(format!("k{i}")), f)).collect(),
        );
        let ranks = fractional_ranks(&table).unwrap();
        let m = freqs.len() as f64;
        let total: f64 = ranks.0.values().sum();
        prop_assert!((total - m * (m + 1.0) / 2.0).abs() < 1e-9);
        prop_assert!(ranks.0.values().all(|&r| (1.0..=m).contains(&r)));
        // more frequent means strictly better rank
        for (a, &fa) in freqs.iter().enumerate() {
            for (b, &fb) in freqs.iter().enumerate() {
                let ra = ranks.get(&SubstructureKey::subtree(format!("k{a}"))).unwrap();
                let rb = ranks.get(&SubstructureKey::subtree(format!("k{b}"))).unwrap();
                if fa > fb {
                    prop_assert!(ra < rb);
                }
            }
        }
    }

    #[test]
    fn frequency_cap_threshold(programs in prop::collection::vec(0usize..6, 0..40), p in 0.01f64..=1.0) {
        let lexer = Lexer::default();
        let pool: Vec<InstanceRecord> = programs
            .iter()
            .enumerate()
            .map(|(i, k)| record(i, &format!("f ( a{k} )"), &lexer))
            .collect();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for r in &pool {
            *counts.entry(r.program.as_str()).or_default() += 1;
        }
        let limit = p * pool.len() as f64;
        let kept = filter_frequency_cap(pool.clone(), p).unwrap();
        let expected: Vec<&InstanceRecord> =
            pool.iter().filter(|r| counts[r.program.as_str()] as f64 <= limit).collect();
        prop_assert_eq!(kept.iter().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn index_survives_removals(terms in prop::collection::vec(term(), 1..25), order in any::<u64>()) {
        let lexer = Lexer::default();
        let pool: Vec<InstanceRecord> =
            terms.iter().enumerate().map(|(i, t)| record(i, &t.functional(), &lexer)).collect();
        let mut index = PoolIndex::build(&pool, &Default::default()).unwrap();
        let mut ids: Vec<String> = pool.iter().map(|r| r.id.clone()).collect();
        structdiv::rng::SeededRng::new(order, 0).shuffle(&mut ids);
        for id in &ids {
            index.remove_instance(id).unwrap();
            prop_assert_eq!(index.check_consistency(), Ok(()));
        }
        prop_assert_eq!(index.live_keys(), 0);
        prop_assert!(index.remove_instance(&ids[0]).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn samplers_follow_the_greedy_policy(
        terms in prop::collection::vec(term(), 1..30),
        budget in 0usize..40,
        seed in any::<u64>(),
    ) {
        let lexer = Lexer::default();
        let pool: Vec<InstanceRecord> =
            terms.iter().enumerate().map(|(i, t)| record(i, &t.functional(), &lexer)).collect();
        for preset in Preset::ALL {
            let Some(cfg) = preset.config(3, budget, seed) else { continue };
            let index = PoolIndex::build(&pool, &cfg.substructure).unwrap();
            let lazy = sample_diverse(&index, &cfg).unwrap();
            let linear = sample_diverse(&index, &structdiv::SamplerConfig {
                argmax: ArgmaxStrategy::LinearScan,
                ..cfg
            }).unwrap();
            prop_assert_eq!(&lazy.entries, &linear.entries, "{}", preset);
            if let Err(msg) = support::replay_greedy(&pool, &cfg, &lazy) {
                return Err(TestCaseError::fail(format!("{preset}: {msg}")));
            }
        }
    }
}
