use bimetric_core::field_dynamics::*;
use bimetric_core::quantum_state::EntanglementParams;
use bimetric_core::scenarios::{self, LatticeSpec, ScenarioConfig};
use bimetric_core::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn lattice_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for n in [4096, 65_536] {
        let cfg = LatticeConfig::with_courant(n, 1.0, 0.5, Boundary::Absorbing, 1.0).unwrap();
        let pot = Potential::free(0.01).unwrap();
        let s = source_from_entropy(
            0.5,
            &EntanglementParams::default(),
            n as f64 / 2.0,
            50.0,
            &cfg,
        )
        .unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &s, |b, s| {
                b.iter(|| step_with(black_box(s), &pot, &cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn paired_scenario(c: &mut Criterion) {
    let config = ScenarioConfig {
        separation: 2000.0,
        profile_width: 40.0,
        potential: Potential::free(0.01).unwrap(),
        lattice: LatticeSpec {
            num_points: 1024,
            ..LatticeSpec::default()
        },
        ..ScenarioConfig::default()
    };
    let region = scenarios::default_region(&config.resolve().unwrap());
    let mut group = c.benchmark_group("intervening_mass");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| scenarios::run_intervening_mass_with(&config, region, 10.0, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, lattice_step, paired_scenario);
criterion_main!(benches);
