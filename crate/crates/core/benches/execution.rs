use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use teamdp::cases::{build_gaussian_witsenhausen, build_pomdp_team, tiger, WitsenhausenGaussianConfig};
use teamdp::oracle::{brute_force, DEFAULT_BRUTE_FORCE_CAP};
use teamdp::par::Execution;
use teamdp::random::{random_team, rng, RandomTeamConfig};
use teamdp::solver::{solve_exact, stagewise_iterate, SolveOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn oracle(c: &mut Criterion) {
    let cfg = RandomTeamConfig {
        y: (3, 3),
        u: (3, 3),
        omega: (3, 3),
        ..RandomTeamConfig::small(3, 3)
    };
    let spec = random_team(&mut rng(1), &cfg);
    let mut group = c.benchmark_group("brute_force");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| brute_force(&spec, DEFAULT_BRUTE_FORCE_CAP, exec).unwrap())
        });
    }
    group.finish();
}

fn exact(c: &mut Criterion) {
    let spec = build_pomdp_team(&tiger(3)).unwrap();
    let mut group = c.benchmark_group("solve_exact_tiger");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = SolveOptions {
            execution: exec,
            ..SolveOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| solve_exact(&spec, opts).unwrap())
        });
    }
    group.finish();
}

fn stagewise(c: &mut Criterion) {
    let inst = build_gaussian_witsenhausen(&WitsenhausenGaussianConfig::new(0.2, 5.0, 21, 3.0)).unwrap();
    let baseline = inst.best_affine_baseline().unwrap();
    let spec = inst.team_spec().unwrap();
    let mut group = c.benchmark_group("stagewise_gaussian");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| stagewise_iterate(&spec, &baseline.policy, 5, 1e-12, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, oracle, exact, stagewise);
criterion_main!(benches);
