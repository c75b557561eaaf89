use std::path::{Path, PathBuf};
use std::sync::Arc;

use condor_core::balance::balance_stoichiometry;
use condor_core::condition::ConditionConfig;
use condor_core::debate::{tournament, HeuristicJudge, Panel, TournamentSettings};
use condor_core::molgraph::{mcs, parse_smiles, McsOptions};
use condor_core::pipeline::{read_queries, Pipeline, PipelineConfig};
use condor_core::recall::{Candidate, CandidatePool, Origin};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/fixtures")
}

fn pipeline() -> Pipeline {
    let mut config = PipelineConfig::load(&fixtures().join("golden.conf")).unwrap();
    config.base = Some(fixtures().join("corpus.jsonl"));
    Pipeline::load(config).unwrap().0
}

fn grid_pool(n: usize) -> CandidatePool {
    let cats = ["", "DMAP", "CuI", "Pd(OAc)2", "Pd/C", "TsOH"];
    let sol = ["DCM", "THF", "DMF", "MeCN", "toluene", "EtOAc", "dioxane", "NMP", "DCE", "acetone", "DMSO", "DME"];
    let sol2 = ["", "water", "EtOH", "MeOH", "hexane"];
    let rea = ["TEA", "DIPEA", "pyridine", "K2CO3", "", "NaHCO3", "DBU", "Cs2CO3", "NMM", "K3PO4"];
    let rea2 = ["", "HOBt", "DMAP"];
    let candidates = (0..n)
        .map(|i| {
            let mut r = i;
            let mut take = |xs: &[&'static str]| {
                let x = xs[r % xs.len()];
                r /= xs.len();
                x
            };
            let (s, c, t, s2, t2) = (take(&sol), take(&cats), take(&rea), take(&sol2), take(&rea2));
            Candidate {
                config: ConditionConfig::from_slots([c, s, s2, t, t2]),
                origin: Origin::Matched,
                provenance: vec![],
                channel_hits: 1,
                score: 0.0,
                parent: None,
                replaced: vec![],
            }
        })
        .collect();
    CandidatePool { candidates, cap: 5000 }
}

fn bench_chemistry(c: &mut Criterion) {
    let glucose = parse_smiles("OCC1OC(O)C(O)C(O)C1O").unwrap();
    let o2 = parse_smiles("O=O").unwrap();
    let co2 = parse_smiles("O=C=O").unwrap();
    let water = parse_smiles("O").unwrap();
    c.bench_function("balance glucose combustion", |b| {
        b.iter(|| balance_stoichiometry(black_box(&[glucose.clone(), o2.clone()]), &[co2.clone(), water.clone()], &[]))
    });

    let a = parse_smiles("CC(=O)Nc1ccc(O)cc1").unwrap();
    let d = parse_smiles("CC(=O)Nc1ccccc1C(=O)O").unwrap();
    c.bench_function("mcs paracetamol vs acetanilide acid", |b| {
        b.iter(|| mcs(black_box(&a), black_box(&d), McsOptions::default()))
    });
}

fn bench_pipeline(c: &mut Criterion) {
    let p = pipeline();
    let queries = read_queries(&fixtures().join("queries.jsonl")).unwrap();
    let q = &queries[0];
    let reaction = q.parse().unwrap();
    let report = p.report(&reaction);

    c.bench_function("report", |b| b.iter(|| p.report(black_box(&reaction))));
    c.bench_function("recall", |b| b.iter(|| p.recall(black_box(&reaction), &report).unwrap()));

    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    let ctx = p.context(&reaction, &report);
    let panel = Panel::uniform(Arc::new(HeuristicJudge));
    let pool = grid_pool(5000);
    let settings = TournamentSettings { keep_boards: false, ..Default::default() };
    group.bench_function("tournament 5000 to 50", |b| {
        b.iter(|| tournament(&ctx, black_box(&pool), &panel, &settings).unwrap())
    });
    group.bench_function("recommend", |b| b.iter(|| p.recommend(black_box(q)).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_chemistry, bench_pipeline);
criterion_main!(benches);
