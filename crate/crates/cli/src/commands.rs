use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Parser;
use serde_json::json;

use structdiv::analysis::{self, BucketSpec, MiOptions};
use structdiv::config::ConfigSource;
use structdiv::dataset::{self, Strictness};
use structdiv::grammar::{self, ToyGrammar};
use structdiv::sampler::{self, ArgmaxStrategy, SampleResult};
use structdiv::splits::{self, SplitKind, SplitSpec, TestSize};
use structdiv::substructure::SubstructureConfig;
use structdiv::{Config, InstanceRecord, PoolIndex};

use crate::manifest::{digest_inputs, digest_outputs, RunManifest, MANIFEST_FILE};
use crate::{ArgmaxArg, Cli, Command, Common, KindArg, SplitKindArg};

/// An ingested pool plus what is needed to describe it in a manifest.
struct Loaded {
    config: Config,
    source: ConfigSource,
    records: Vec<InstanceRecord>,
    inputs: Vec<PathBuf>,
}

fn load(pool: &Path, common: &Common) -> Result<Loaded> {
    let (config, source) = Config::resolve(common.config.as_deref(), common.profile.as_deref())?;
    let lexer = config.lexer()?;
    let strictness = if common.lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    };
    let ingested = dataset::ingest(pool, &lexer, strictness)?;
    for (line, reason) in &ingested.skipped {
        eprintln!("skipped line {line}: {reason}");
    }
    let mut records = ingested.records;
    if let Some(p) = common.frequency_cap {
        let before = records.len();
        records = dataset::filter_frequency_cap(records, p)?;
        eprintln!("frequency cap {p}: kept {} of {before} instances", records.len());
    }
    let mut inputs = vec![pool.to_path_buf()];
    if let Some(c) = &common.config {
        inputs.push(c.clone());
    } else if let ConfigSource::File { path } = &source {
        inputs.push(path.clone());
    }
    Ok(Loaded {
        config,
        source,
        records,
        inputs,
    })
}

/// Collects output files and writes the manifest last.
struct Run<'a> {
    command: &'static str,
    argv: &'a [String],
    out: PathBuf,
    files: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(command: &'static str, argv: &'a [String], out: &Path) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Run {
            command,
            argv,
            out: out.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.out.join(name)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    fn json(&mut self, name: &str, value: &impl serde::Serialize) -> Result<()> {
        self.text(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    fn finish(
        self,
        loaded: Option<&Loaded>,
        extra_inputs: &[PathBuf],
        params: serde_json::Value,
        seeds: Vec<u64>,
    ) -> Result<()> {
        let mut inputs: Vec<PathBuf> = loaded.map(|l| l.inputs.clone()).unwrap_or_default();
        inputs.extend_from_slice(extra_inputs);
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            argv: self.argv.to_vec(),
            config: loaded.map(|l| l.config.clone()),
            config_source: loaded.map(|l| l.source.clone()),
            params,
            seeds,
            inputs: digest_inputs(&inputs)?,
            outputs: digest_outputs(&self.out, &self.files)?,
        };
        manifest.write(&self.out)
    }
}

fn substructure(config: &Config, kind: Option<KindArg>, d: Option<usize>) -> Result<SubstructureConfig> {
    let mut cfg = config.substructure;
    if let Some(k) = kind {
        cfg.kind = k.into();
    }
    if let Some(d) = d {
        cfg.d = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `NAME=PATH` or a bare path named after its file stem.
fn named_sample(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((name, path)) if !name.is_empty() && !Path::new(arg).exists() => {
            (name.to_string(), PathBuf::from(path))
        }
        _ => {
            let path = PathBuf::from(arg);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| arg.to_string());
            (name, path)
        }
    }
}

fn read_samples(args: &[String]) -> Result<Vec<(String, Vec<String>, PathBuf)>> {
    args.iter()
        .map(|a| {
            let (name, path) = named_sample(a);
            let ids = dataset::read_id_list(&path)?;
            Ok((name, ids, path))
        })
        .collect()
}

fn write_trace(path: &Path, result: &SampleResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "substructure", "instance_id"])?;
    for e in &result.entries {
        let key = e.substructure.as_ref().map(|k| k.to_string()).unwrap_or_default();
        w.write_record([e.iteration.to_string(), key, e.instance_id.clone()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(command: Command, argv: &[String]) -> Result<()> {
    match command {
        Command::IngestCheck { pool, common } => {
            let loaded = load(&pool, &common)?;
            let mut run = Run::new("ingest-check", argv, &common.out)?;
            let templates: std::collections::HashSet<&str> =
                loaded.records.iter().map(|r| r.template.as_str()).collect();
            let summary = json!({
                "instances": loaded.records.len(),
                "templates": templates.len(),
            });
            println!("instances\t{}", loaded.records.len());
            println!("templates\t{}", templates.len());
            run.json("summary.json", &summary)?;
            run.finish(Some(&loaded), &[], json!({}), vec![])
        }

        Command::Stats { pool, common, d } => {
            let loaded = load(&pool, &common)?;
            let d = d.unwrap_or(loaded.config.substructure.d);
            let s = analysis::stats(&loaded.records, d);
            let mut run = Run::new("stats", argv, &common.out)?;
            let text = format!(
                "instances\t{}\nbigrams\t{}\nsubtrees\t{}\ntemplates\t{}\n",
                s.instances, s.bigrams, s.subtrees, s.templates
            );
            print!("{text}");
            run.text("stats.tsv", &text)?;
            run.json("summary.json", &s)?;
            run.finish(Some(&loaded), &[], json!({ "d": d }), vec![])
        }

        Command::Sample {
            pool,
            common,
            preset,
            budget,
            seed,
            d,
            argmax,
        } => {
            let loaded = load(&pool, &common)?;
            let d = d.unwrap_or(loaded.config.substructure.d);
            let (result, params) = match preset.config(d, budget, seed) {
                None => (
                    sampler::sample_random(&loaded.records, budget, seed),
                    json!({ "preset": preset, "budget": budget, "seed": seed }),
                ),
                Some(mut cfg) => {
                    cfg.argmax = match argmax {
                        ArgmaxArg::LazyHeap => ArgmaxStrategy::LazyHeap,
                        ArgmaxArg::LinearScan => ArgmaxStrategy::LinearScan,
                    };
                    let index = PoolIndex::build(&loaded.records, &cfg.substructure)?;
                    (
                        sampler::sample_diverse(&index, &cfg)?,
                        json!({ "preset": preset, "sampler": cfg }),
                    )
                }
            };
            let mut run = Run::new("sample", argv, &common.out)?;
            dataset::write_id_list(run.path("sample.ids"), &result.ids())?;
            write_trace(&run.path("trace.csv"), &result)?;
            println!("sampled {} of {} instances", result.len(), loaded.records.len());
            run.finish(Some(&loaded), &[], params, vec![seed])
        }

        Command::Split {
            pool,
            common,
            kind,
            test_fraction,
            test_size,
            seed,
        } => {
            let loaded = load(&pool, &common)?;
            let kind = match kind {
                SplitKindArg::Iid => SplitKind::Iid,
                SplitKindArg::Template => SplitKind::Template,
                SplitKindArg::Subtree => SplitKind::Subtree,
            };
            let size = match (test_fraction, test_size) {
                (Some(f), _) => TestSize::Fraction(f),
                (None, Some(k)) => TestSize::Count(k),
                (None, None) => bail!("one of --test-fraction or --test-size is required"),
            };
            let spec = SplitSpec::new(kind, size, seed);
            let split = splits::split(&loaded.records, &spec)?;
            let mut run = Run::new("split", argv, &common.out)?;
            dataset::write_id_list(run.path("pool.ids"), &split.pool)?;
            dataset::write_id_list(run.path("test.ids"), &split.test)?;
            println!("pool {} test {}", split.pool.len(), split.test.len());
            run.finish(Some(&loaded), &[], json!({ "split": spec }), vec![seed])
        }

        Command::CheckSolvable {
            pool,
            common,
            split,
        } => {
            let loaded = load(&pool, &common)?;
            let pool_ids = split.join("pool.ids");
            let test_ids = split.join("test.ids");
            let s = splits::Split {
                pool: dataset::read_id_list(&pool_ids)?,
                test: dataset::read_id_list(&test_ids)?,
                spec: SplitSpec::new(SplitKind::Iid, TestSize::Count(0), 0),
            };
            let report = splits::check_solvable(&loaded.records, &s)?;
            let mut run = Run::new("check-solvable", argv, &common.out)?;
            println!("solvable\t{}", report.solvable);
            for (token, ids) in &report.missing {
                println!("missing\t{token}\t{}", ids.len());
            }
            run.json("solvability.json", &report)?;
            run.finish(Some(&loaded), &[pool_ids, test_ids], json!({}), vec![])
        }

        Command::AnalyzeCoverage {
            pool,
            common,
            samples,
            kind,
            d,
            bucket_base,
        } => {
            let loaded = load(&pool, &common)?;
            let cfg = substructure(&loaded.config, kind, d)?;
            let samples = read_samples(&samples)?;
            let named: Vec<(String, Vec<String>)> =
                samples.iter().map(|(n, ids, _)| (n.clone(), ids.clone())).collect();
            let buckets = BucketSpec::Geometric { base: bucket_base };
            let report = analysis::coverage_report(&loaded.records, &named, &cfg, &buckets)?;

            let mut run = Run::new("analyze-coverage", argv, &common.out)?;
            let mut w = csv::Writer::from_path(run.path("coverage.csv"))?;
            w.write_record(["sample", "size", "bucket", "rank_from", "rank_to", "pool_keys", "covered_keys"])?;
            for s in &report.samples {
                for (b, &covered) in s.counts.iter().enumerate() {
                    let to = report.edges.get(b + 1).map(|e| e.to_string()).unwrap_or_else(|| "inf".into());
                    w.write_record([
                        s.name.clone(),
                        s.size.to_string(),
                        b.to_string(),
                        report.edges[b].to_string(),
                        to,
                        report.pool_counts[b].to_string(),
                        covered.to_string(),
                    ])?;
                }
                println!("{}\t{} of {} keys", s.name, s.total, report.pool_total);
            }
            w.flush()?;
            drop(w);
            run.json("summary.json", &report)?;
            let paths: Vec<PathBuf> = samples.into_iter().map(|(_, _, p)| p).collect();
            run.finish(
                Some(&loaded),
                &paths,
                json!({ "substructure": cfg, "buckets": buckets }),
                vec![],
            )
        }

        Command::AnalyzeAmi {
            pool,
            common,
            samples,
            kind,
            d,
            exclude_diagonal,
            top_k,
        } => {
            let loaded = load(&pool, &common)?;
            let cfg = substructure(&loaded.config, kind, d)?;
            let samples = read_samples(&samples)?;
            let by_id: BTreeMap<&str, &InstanceRecord> =
                loaded.records.iter().map(|r| (r.id.as_str(), r)).collect();
            let options = MiOptions {
                include_diagonal: !exclude_diagonal,
                top_k,
            };

            let mut run = Run::new("analyze-ami", argv, &common.out)?;
            let mut w = csv::Writer::from_path(run.path("ami.csv"))?;
            w.write_record(["sample", "size", "substructures", "ami"])?;
            let mut pairs = if top_k > 0 {
                let mut p = csv::Writer::from_path(run.path("top_pairs.csv"))?;
                p.write_record(["sample", "a", "b", "p_a", "p_b", "p_ab", "mi"])?;
                Some(p)
            } else {
                None
            };
            for (name, ids, _) in &samples {
                let sample = ids
                    .iter()
                    .map(|id| {
                        by_id
                            .get(id.as_str())
                            .copied()
                            .ok_or_else(|| structdiv::Error::SampleNotSubsetOfPool(id.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let report = analysis::pairwise_mi(&sample, &cfg, &options)?;
                w.write_record([
                    name.clone(),
                    report.sample_size.to_string(),
                    report.keys.len().to_string(),
                    format!("{:.12}", report.ami),
                ])?;
                println!("{name}\tami {:.6}", report.ami);
                if let Some(p) = pairs.as_mut() {
                    for pair in &report.top_pairs {
                        p.write_record([
                            name.clone(),
                            pair.a.to_string(),
                            pair.b.to_string(),
                            format!("{:.12}", pair.p_a),
                            format!("{:.12}", pair.p_b),
                            format!("{:.12}", pair.p_ab),
                            format!("{:.12}", pair.mi),
                        ])?;
                    }
                }
            }
            w.flush()?;
            if let Some(mut p) = pairs {
                p.flush()?;
            }
            drop(w);
            let paths: Vec<PathBuf> = samples.into_iter().map(|(_, _, p)| p).collect();
            run.finish(Some(&loaded), &paths, json!({ "substructure": cfg, "mi": options }), vec![])
        }

        Command::GenPool { n, seed, grammar, out } => {
            let g = match &grammar {
                Some(path) => {
                    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                    ToyGrammar::from_toml_str(&text)?
                }
                None => ToyGrammar::bundled(),
            };
            let records = grammar::gen_pool(&g, n, seed)?;
            let mut run = Run::new("gen-pool", argv, &out)?;
            dataset::write_pool(run.path("pool.jsonl"), &records)?;
            println!("generated {n} instances");
            let inputs: Vec<PathBuf> = grammar.into_iter().collect();
            run.finish(None, &inputs, json!({ "n": n, "grammar": g.spec() }), vec![seed])
        }

        Command::Replay { manifest, out } => replay(&manifest, &out),
    }
}

/// Replace (or add) the `--out` value of a recorded argument list.
fn with_out(argv: &[String], out: &Path) -> Vec<String> {
    let out = out.display().to_string();
    let mut result = Vec::with_capacity(argv.len() + 2);
    let mut replaced = false;
    let mut i = 0;
    while i < argv.len() {
        let arg = &argv[i];
        if arg == "--out" {
            result.push(arg.clone());
            result.push(out.clone());
            replaced = true;
            i += 2;
            continue;
        }
        if arg.starts_with("--out=") {
            result.push(format!("--out={out}"));
            replaced = true;
        } else {
            result.push(arg.clone());
        }
        i += 1;
    }
    if !replaced {
        result.push("--out".into());
        result.push(out);
    }
    result
}

fn replay(manifest_path: &Path, out: &Path) -> Result<()> {
    let recorded = RunManifest::read(manifest_path)?;
    if recorded.command == "replay" {
        bail!("refusing to replay a replay");
    }
    for input in &recorded.inputs {
        let now = crate::manifest::sha256_file(Path::new(&input.path))?;
        if now != input.sha256 {
            bail!("input {} changed since the recorded run", input.path);
        }
    }
    let argv = with_out(&recorded.argv, out);
    let cli = Cli::try_parse_from(std::iter::once("structdiv".to_string()).chain(argv.iter().cloned()))?;
    run(cli.command, &argv)?;
    let fresh = RunManifest::read(&out.join(MANIFEST_FILE))?;
    let mut mismatched = Vec::new();
    for (a, b) in recorded.outputs.iter().zip(&fresh.outputs) {
        if a != b {
            mismatched.push(a.path.clone());
        }
    }
    if recorded.outputs.len() != fresh.outputs.len() || !mismatched.is_empty() {
        bail!("outputs differ from the recorded run: {}", mismatched.join(", "));
    }
    println!("reproduced {} output files", fresh.outputs.len());
    Ok(())
}
