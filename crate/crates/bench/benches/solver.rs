use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use gpme_core::patch::{step_explicit, step_implicit};
use gpme_core::simulation::plan_mesh;
use gpme_core::validation::{single_patch_problem, two_patch_problem};
use gpme_core::{run, PatchState, RunSettings, Stepper};

fn single_steps(c: &mut Criterion) {
    let problem = single_patch_problem().unwrap();
    let b = problem.oracle().unwrap()[0];
    let mut group = c.benchmark_group("single_step");
    for dx in [0.02, 0.01, 0.005] {
        for stepper in [Stepper::Explicit, Stepper::Implicit] {
            let settings = RunSettings::new(dx, 1.0).with_stepper(stepper);
            let mesh = plan_mesh(&problem, &settings).unwrap();
            let state =
                PatchState::init(mesh.grid, b.interfaces(0.0), |x| b.value(x, 0.0)).unwrap();
            let nl = problem.nonlinearity;
            let id = BenchmarkId::new(format!("{stepper:?}").to_lowercase(), dx);
            group.bench_with_input(id, &state, |bench, s| match stepper {
                Stepper::Explicit => {
                    bench.iter(|| step_explicit(black_box(s), &mesh, &nl).unwrap())
                }
                Stepper::Implicit => {
                    bench.iter(|| step_implicit(black_box(s), &mesh, &nl).unwrap())
                }
            });
        }
    }
    group.finish();
}

fn two_patch_run(c: &mut Criterion) {
    let problem = two_patch_problem().unwrap();
    let mut settings = RunSettings::new(0.04, 1.1);
    settings.ab_fatal = Some(false);
    let mut group = c.benchmark_group("two_patch_run");
    group.sample_size(20);
    group.bench_function("dx=0.04", |bench| {
        bench.iter(|| run(black_box(&problem), &settings).unwrap())
    });
    settings.check_every_step = false;
    group.bench_function("dx=0.04 snapshot checks only", |bench| {
        bench.iter(|| run(black_box(&problem), &settings).unwrap())
    });
    group.finish();
}

criterion_group!(benches, single_steps, two_patch_run);
criterion_main!(benches);
