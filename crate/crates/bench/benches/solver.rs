use criterion::{criterion_group, criterion_main, Criterion};
use isofair_bench::{linear2, mesh};
use isofair_core::{
    check_flow_scalability, solve_num, NetworkUtilityProfile, SampleConfig, SolverConfig,
};

fn bench_solve(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let (topo, pop) = linear2();
    for alpha in [1.0, 2.0] {
        let profile = NetworkUtilityProfile::alpha_fair_uniform(topo.routes().len(), alpha, 1.0);
        c.bench_function(&format!("solve/linear2/alpha{alpha}"), |b| {
            b.iter(|| solve_num(&topo, &profile, &pop, &cfg).unwrap())
        });
    }
    for n in [3, 6] {
        let (topo, pop) = mesh(n);
        let profile = NetworkUtilityProfile::alpha_fair_uniform(topo.routes().len(), 1.0, 1.0);
        c.bench_function(&format!("solve/mesh{n}x{n}/alpha1"), |b| {
            b.iter(|| solve_num(&topo, &profile, &pop, &cfg).unwrap())
        });
    }
}

fn bench_check(c: &mut Criterion) {
    let solver = SolverConfig::default();
    let sample = SampleConfig { a_grid: vec![0.5, 2.0], ..SampleConfig::default() };
    let (topo, pop) = mesh(3);
    let profile = NetworkUtilityProfile::alpha_fair_uniform(topo.routes().len(), 2.0, 1.0);
    c.bench_function("check/flow_scalability/mesh3x3", |b| {
        b.iter(|| check_flow_scalability(&topo, &profile, &pop, &sample, &solver).unwrap())
    });
}

criterion_group!(benches, bench_solve, bench_check);
criterion_main!(benches);
