use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::rngs::StdRng;
use rand::SeedableRng;

use twp_core::gen::{random_game_within, random_spec, GenParams};
use twp_core::model::{PrioritySpec, TimedAutomaton};
use twp_core::par::{self, Exec};
use twp_core::verify::{verify_per_dimension, Objective};

fn corpus(n: usize, dims: usize) -> Vec<(TimedAutomaton, PrioritySpec)> {
    let mut rng = StdRng::seed_from_u64(11);
    let p = GenParams {
        dims: (dims, dims),
        locations: (3, 5),
        ..GenParams::default()
    };
    (0..n)
        .map(|_| {
            let g = random_game_within(&mut rng, &p, 400);
            let spec = random_spec(&mut rng, &g.automaton, 3);
            (g.automaton, spec)
        })
        .collect()
}

// one model, dimensions checked side by side
fn per_dimension(c: &mut Criterion) {
    let models = corpus(8, 3);
    let mut group = c.benchmark_group("per_dimension");
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| {
                for (ta, spec) in &models {
                    black_box(verify_per_dimension(ta, spec, Objective::Eventual, exec).unwrap());
                }
            })
        });
    }
    group.finish();
}

// many models, one task each
fn model_sweep(c: &mut Criterion) {
    let models = corpus(64, 2);
    let mut group = c.benchmark_group("model_sweep");
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| {
                par::map(exec, models.iter().collect(), |(ta, spec)| {
                    verify_per_dimension(ta, spec, Objective::Direct, Exec::Sequential)
                        .unwrap()
                        .holds
                })
            })
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = per_dimension, model_sweep
}
criterion_main!(benches);
