//! Brute-force reference implementations shared by the test targets.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use structdiv::ast::{Ast, AstNode, NodeClass};
use structdiv::instance::InstanceRecord;
use structdiv::rng::SeededRng;
use structdiv::sampler::{InstanceWeight, SampleResult, SampledSet, SamplerConfig, SubstructureWeight};
use structdiv::substructure::{bag_keys, escape_label, SubstructureKey};

/// Child lists of every ordered rooted tree with exactly `n` nodes; node 0
/// is the root and nodes are numbered in preorder.
pub fn ordered_shapes(n: usize) -> Vec<Vec<Vec<usize>>> {
    assert!(n >= 1);
    // forests of `m` nodes as lists of subtree sizes plus their shapes
    fn forests(m: usize) -> Vec<Vec<Vec<Vec<usize>>>> {
        if m == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for first in 1..=m {
            for head in ordered_shapes(first) {
                for rest in forests(m - first) {
                    let mut f = vec![head.clone()];
                    f.extend(rest);
                    out.push(f);
                }
            }
        }
        out
    }
    forests(n - 1)
        .into_iter()
        .map(|forest| {
            let mut children = vec![Vec::new()];
            for tree in forest {
                let offset = children.len();
                children[0].push(offset);
                for kids in tree {
                    children.push(kids.into_iter().map(|k| k + offset).collect());
                }
            }
            children
        })
        .collect()
}

pub fn tree(children: &[Vec<usize>], labels: &[String]) -> Ast {
    let nodes = children
        .iter()
        .zip(labels)
        .map(|(kids, label)| AstNode {
            label: label.clone(),
            class: if kids.is_empty() {
                NodeClass::Value
            } else {
                NodeClass::Function
            },
            children: kids.clone(),
        })
        .collect();
    Ast::from_parts(nodes, Some(0))
}

/// Random ordered tree with `n` nodes: each new node attaches as the last
/// child of a uniformly chosen earlier node.
pub fn random_tree(rng: &mut SeededRng, n: usize, alphabet: &[&str]) -> Ast {
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 1..n {
        children[rng.index(v)].push(v);
    }
    let labels: Vec<String> = (0..n)
        .map(|_| alphabet[rng.index(alphabet.len())].to_string())
        .collect();
    tree(&children, &labels)
}

fn serialize(ast: &Ast, v: usize, members: u64) -> String {
    let mut s = String::new();
    escape_label(&ast.node(v).label, &mut s);
    let kept: Vec<String> = ast
        .node(v)
        .children
        .iter()
        .filter(|&&c| members >> c & 1 == 1)
        .map(|&c| serialize(ast, c, members))
        .collect();
    if !kept.is_empty() {
        s.push('(');
        s.push_str(&kept.join(","));
        s.push(')');
    }
    s
}

/// Every node subset of size 1..=d that is connected (exactly one member
/// has no parent inside the subset), serialized from that member down.
pub fn brute_subtrees(ast: &Ast, d: usize) -> BTreeSet<String> {
    let n = ast.len();
    assert!(n <= 20, "brute force needs a small tree");
    let parents = ast.parents();
    let mut out = BTreeSet::new();
    for members in 1u64..(1u64 << n) {
        if members.count_ones() as usize > d {
            continue;
        }
        let tops: Vec<usize> = (0..n)
            .filter(|&v| members >> v & 1 == 1)
            .filter(|&v| parents[v].is_none_or(|p| members >> p & 1 == 0))
            .collect();
        if let [top] = tops[..] {
            out.insert(serialize(ast, top, members));
        }
    }
    out
}

/// MI of the indicators of `a` and `b` from an explicit 2x2 table.
pub fn contingency_mi<K: Ord>(bags: &[BTreeSet<K>], a: &K, b: &K) -> f64 {
    let n = bags.len() as f64;
    let mut table = [[0.0f64; 2]; 2];
    for bag in bags {
        table[bag.contains(a) as usize][bag.contains(b) as usize] += 1.0;
    }
    let row = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let col = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let mut mi = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            if table[x][y] > 0.0 {
                let p = table[x][y] / n;
                mi += p * (p / ((row[x] / n) * (col[y] / n))).ln();
            }
        }
    }
    mi
}

/// Mean pairwise MI over all ordered pairs of the sample's keys.
pub fn naive_ami<K: Ord + Clone>(bags: &[BTreeSet<K>], include_diagonal: bool) -> f64 {
    let keys: Vec<K> = bags.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let m = keys.len() as f64;
    let mut total = 0.0;
    for (i, a) in keys.iter().enumerate() {
        for (j, b) in keys.iter().enumerate() {
            if include_diagonal || i != j {
                total += contingency_mi(bags, a, b);
            }
        }
    }
    let pairs = if include_diagonal { m * m } else { m * (m - 1.0) };
    if pairs == 0.0 {
        0.0
    } else {
        total / pairs
    }
}

/// Re-run the greedy policy from scratch with plain sets and check that
/// every recorded (substructure, instance) choice has maximal weight.
pub fn replay_greedy(
    pool: &[InstanceRecord],
    cfg: &SamplerConfig,
    result: &SampleResult,
) -> Result<(), String> {
    let bags: Vec<BTreeSet<SubstructureKey>> =
        pool.iter().map(|r| bag_keys(r, &cfg.substructure)).collect();
    let templates: Vec<&str> = pool.iter().map(|r| r.template.as_str()).collect();
    let position: HashMap<&str, usize> =
        pool.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let mut live = vec![true; pool.len()];
    let mut c_sample: BTreeSet<SubstructureKey> = BTreeSet::new();
    let mut t_sample: BTreeSet<&str> = BTreeSet::new();

    let expected = cfg.budget.min(pool.len());
    if result.entries.len() != expected {
        return Err(format!("{} entries, expected {expected}", result.entries.len()));
    }
    for (t, entry) in result.entries.iter().enumerate() {
        let e = *position
            .get(entry.instance_id.as_str())
            .ok_or_else(|| format!("step {t}: unknown id {}", entry.instance_id))?;
        if !live[e] {
            return Err(format!("step {t}: {} taken twice", entry.instance_id));
        }
        let live_keys: BTreeSet<&SubstructureKey> =
            (0..pool.len()).filter(|&i| live[i]).flat_map(|i| &bags[i]).collect();
        let freq = |k: &SubstructureKey| (0..pool.len()).filter(|&i| live[i] && bags[i].contains(k)).count();
        let t_freq = |x: &str| (0..pool.len()).filter(|&i| live[i] && templates[i] == x).count();
        match &entry.substructure {
            None => {
                if !live_keys.is_empty() {
                    return Err(format!("step {t}: no substructure although some are live"));
                }
            }
            Some(c) => {
                let w_c = |k: &SubstructureKey| match cfg.substructure_weight {
                    SubstructureWeight::UnseenFreq if !c_sample.contains(k) => freq(k),
                    SubstructureWeight::UnseenUniform if !c_sample.contains(k) => 1,
                    SubstructureWeight::Constant => 1,
                    _ => 0,
                };
                let best = live_keys.iter().map(|k| w_c(k)).max().unwrap_or(0);
                if !live_keys.contains(c) || w_c(c) != best {
                    return Err(format!("step {t}: {c} has weight {} < {best}", w_c(c)));
                }
                if !bags[e].contains(c) {
                    return Err(format!("step {t}: instance does not contain {c}"));
                }
                let w_e = |i: usize| match cfg.instance_weight {
                    InstanceWeight::RandEx => 1,
                    InstanceWeight::RandNewT => !t_sample.contains(templates[i]) as usize,
                    InstanceWeight::FreqNewT if t_sample.contains(templates[i]) => 0,
                    InstanceWeight::FreqNewT => t_freq(templates[i]),
                };
                let best = (0..pool.len())
                    .filter(|&i| live[i] && bags[i].contains(c))
                    .map(w_e)
                    .max()
                    .unwrap();
                if w_e(e) != best {
                    return Err(format!("step {t}: instance weight {} < {best}", w_e(e)));
                }
            }
        }

        live[e] = false;
        match (cfg.sampled_set, &entry.substructure) {
            (SampledSet::Covered, _) => c_sample.extend(bags[e].iter().cloned()),
            (SampledSet::Chosen, Some(c)) => {
                c_sample.insert(c.clone());
            }
            (SampledSet::Chosen, None) => {}
        }
        t_sample.insert(templates[e]);

        let live_keys: BTreeSet<&SubstructureKey> =
            (0..pool.len()).filter(|&i| live[i]).flat_map(|i| &bags[i]).collect();
        if !live_keys.is_empty() && live_keys.iter().all(|k| c_sample.contains(*k)) {
            c_sample.clear();
        }
        let live_templates: BTreeSet<&str> =
            (0..pool.len()).filter(|&i| live[i]).map(|i| templates[i]).collect();
        if !live_templates.is_empty() && live_templates.iter().all(|x| t_sample.contains(x)) {
            t_sample.clear();
        }
    }
    Ok(())
}

/// Count violations of: a template is never repeated while some live
/// template is still unsampled.
pub fn template_repeats(pool: &[InstanceRecord], result: &SampleResult) -> usize {
    let position: HashMap<&str, usize> =
        pool.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let mut live: HashMap<&str, usize> = HashMap::new();
    for r in pool {
        *live.entry(r.template.as_str()).or_default() += 1;
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut violations = 0;
    for entry in &result.entries {
        if live.keys().all(|t| seen.contains(t)) {
            seen.clear();
        }
        let t = pool[position[entry.instance_id.as_str()]].template.as_str();
        if !seen.insert(t) {
            violations += 1;
        }
        let count = live.get_mut(t).unwrap();
        *count -= 1;
        if *count == 0 {
            live.remove(t);
        }
    }
    violations
}

/// Count violations of: the chosen bigram is not yet covered by the sample
/// while some live bigram is uncovered.
pub fn bigram_repeats(pool: &[InstanceRecord], cfg: &SamplerConfig, result: &SampleResult) -> usize {
    let bags: Vec<BTreeSet<SubstructureKey>> =
        pool.iter().map(|r| bag_keys(r, &cfg.substructure)).collect();
    let position: HashMap<&str, usize> =
        pool.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let mut live: HashMap<&SubstructureKey, usize> = HashMap::new();
    for bag in &bags {
        for k in bag {
            *live.entry(k).or_default() += 1;
        }
    }
    let mut covered: BTreeSet<&SubstructureKey> = BTreeSet::new();
    let mut violations = 0;
    for entry in &result.entries {
        if live.keys().all(|k| covered.contains(k)) {
            covered.clear();
        }
        let uncovered_exists = live.keys().any(|k| !covered.contains(k));
        let e = position[entry.instance_id.as_str()];
        let fresh = entry
            .substructure
            .as_ref()
            .is_some_and(|c| !covered.contains(c) && bags[e].contains(c));
        if uncovered_exists && !fresh {
            violations += 1;
        }
        covered.extend(&bags[e]);
        for k in &bags[e] {
            let count = live.get_mut(k).unwrap();
            *count -= 1;
            if *count == 0 {
                live.remove(k);
            }
        }
    }
    violations
}
