use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use prevision::aggregation::{
    grid_over, range_hull, rival_probe, similarity_failure_analysis, ProbeConfig,
};
use prevision::scenarios::build_scenario;
use prevision::{Exec, Num};

fn paths() -> [(&'static str, Exec); 2] {
    [
        ("sequential", Exec::Sequential),
        ("parallel", Exec::Parallel),
    ]
}

fn rival_probes(c: &mut Criterion) {
    let mut group = c.benchmark_group("rival_probe");
    group.sample_size(10);
    for (id, system) in [
        ("ex3_purely_fa_brier", "singletons"),
        ("ex2_dubins", "forecasts"),
    ] {
        let m = build_scenario(id, &BTreeMap::new())
            .unwrap()
            .resolve()
            .unwrap();
        let sys = &m.systems[system];
        let (lo, hi) = range_hull(sys).unwrap();
        let cfg = ProbeConfig {
            prefix: 2,
            ..ProbeConfig::new(grid_over(&lo, &hi, &Num::ratio(1, 16)).unwrap())
        };
        for (name, exec) in paths() {
            group.bench_with_input(BenchmarkId::new(name, id), &exec, |b, &exec| {
                b.iter(|| black_box(rival_probe(sys, Some(&m.charge), &cfg, &[], exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn case_analysis(c: &mut Criterion) {
    let mut group = c.benchmark_group("similarity_failure");
    group.sample_size(10);
    let m = build_scenario("ctrex_thm2_similarity", &BTreeMap::new())
        .unwrap()
        .resolve()
        .unwrap();
    let cfg = ProbeConfig {
        prefix: 2,
        ..ProbeConfig::new(grid_over(&Num::zero(), &Num::one(), &Num::ratio(1, 16)).unwrap())
    };
    for (name, exec) in paths() {
        group.bench_function(name, |b| {
            b.iter(|| {
                black_box(
                    similarity_failure_analysis(
                        &m.charge,
                        &m.variables["F"],
                        &m.partitions["cells"],
                        &cfg,
                        64,
                        exec,
                    )
                    .unwrap(),
                )
            })
        });
    }
    group.finish();
}

criterion_group!(benches, rival_probes, case_analysis);
criterion_main!(benches);
