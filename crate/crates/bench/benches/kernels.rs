use criterion::{black_box, criterion_group, criterion_main, Criterion};
use thermocap::capacity::one_shot_capacity_lower;
use thermocap::channels::{dephasing, parse_named};
use thermocap::kernel::herm_eig;
use thermocap::localtherm::{build_local_thermalization, fef, kappa_star, TripartiteSetup};
use thermocap::monotones::{channel_dmax_cp_upper, preservability_bracket, PreservabilityParams};
use thermocap::quantum::random::{random_density, rng};
use thermocap::quantum::{Hamiltonian, ThermalContext};
use thermocap::resources::random::random_dephased_channel;
use thermocap::resources::ResourceSpec;
use thermocap::thermo::{build_collision_model, evolve, CollisionStyle};

fn linalg(c: &mut Criterion) {
    let rho = random_density(32, 32, &mut rng(1));
    c.bench_function("herm_eig 32", |b| b.iter(|| herm_eig(black_box(&rho.mat)).unwrap()));
}

fn monotones(c: &mut Criterion) {
    let n = parse_named("depolarizing:3:0.3").unwrap();
    let f = random_dephased_channel(3, 3, &mut rng(2)).unwrap();
    c.bench_function("channel_dmax_cp_upper d=3", |b| b.iter(|| channel_dmax_cp_upper(black_box(&n), &f).unwrap()));
    let spec = ResourceSpec::coherence();
    let params = PreservabilityParams::default();
    c.bench_function("preservability_bracket d=3", |b| b.iter(|| preservability_bracket(&spec, black_box(&n), &params).unwrap()));
}

fn capacity(c: &mut Criterion) {
    let n = dephasing(3, None).unwrap();
    c.bench_function("one_shot_capacity_lower dephasing:3", |b| b.iter(|| one_shot_capacity_lower(black_box(&n), 0.0, 3, 4, 0).unwrap()));
}

fn thermo(c: &mut Criterion) {
    let h = Hamiltonian::diagonal(&[0.0, 1.0]).unwrap();
    let model = build_collision_model(&h, 4, CollisionStyle::FullSwap, 1.0).unwrap();
    let rho = random_density(16, 16, &mut rng(3));
    c.bench_function("collision evolve n=4", |b| b.iter(|| evolve(&model, black_box(&rho), 1.0).unwrap()));
}

fn localtherm(c: &mut Criterion) {
    let q = |p: f64| ThermalContext::from_populations(&[p, 1.0 - p]).unwrap();
    let cc = ThermalContext::new(Hamiltonian::diagonal(&[0.0, 0.4, 1.1, 1.5, 2.3]).unwrap(), 0.8).unwrap();
    let setup = TripartiteSetup::weyl(q(0.7), q(0.6), cc).unwrap();
    let k = kappa_star(&setup.ctx_a, &setup.ctx_b).unwrap();
    c.bench_function("build_local_thermalization d=2", |b| b.iter(|| build_local_thermalization(black_box(&setup), k).unwrap()));
    let rho = random_density(9, 9, &mut rng(4));
    c.bench_function("fef d=3, 8 restarts", |b| b.iter(|| fef(black_box(&rho), 8, 0).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = linalg, monotones, capacity, thermo, localtherm
}
criterion_main!(benches);
