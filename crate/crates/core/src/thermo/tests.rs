use super::*;
use crate::channels::{constant, dephasing, mix};
use crate::kernel::{expm, kron};
use crate::quantum::random::{random_density, rng};
use crate::resources::random::random_gp_coherence_annihilating;
use proptest::prelude::*;

fn qubit_ctx(p0: f64) -> ThermalContext {
    ThermalContext::from_populations(&[p0, 1.0 - p0]).unwrap()
}

fn flat_ctx() -> ThermalContext {
    // beta = 0 with a non-degenerate Hamiltonian.
    ThermalContext::new(Hamiltonian::diagonal(&[0.0, 1.0]).unwrap(), 0.0).unwrap()
}

/// Row-major vectorized generator `sum_k rate_k (U_k (x) conj(U_k) - I)`.
fn liouvillian(m: &CollisionModel) -> ComplexMatrix {
    let dim = m.dim();
    let mut l = ComplexMatrix::zeros(dim * dim, dim * dim);
    for (u, r) in m.unitaries.iter().zip(&m.rates) {
        l.axpy(c(*r, 0.0), &kron(u, &u.conj()));
        l.axpy(c(-*r, 0.0), &ComplexMatrix::identity(dim * dim));
    }
    l
}

fn vectorize(x: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::column(x.data())
}

fn unvec(v: &ComplexMatrix, dim: usize) -> ComplexMatrix {
    ComplexMatrix::new(dim, dim, v.data().to_vec()).unwrap()
}

#[test]
fn generator_counts_and_energy_preservation() {
    let h = Hamiltonian::diagonal(&[0.0, 0.7]).unwrap();
    let m = build_collision_model(&h, 2, CollisionStyle::FullSwap, 1.0).unwrap();
    assert_eq!(m.unitaries.len(), 1);
    let ht = h.total(2);
    let u = &m.unitaries[0];
    assert!((&(u * &ht) - &(&ht * u)).max_abs() < 1e-12);
    assert_eq!(build_collision_model(&h, 3, CollisionStyle::FullSwap, 1.0).unwrap().unitaries.len(), 3);
    assert!(matches!(build_collision_model(&h, 7, CollisionStyle::FullSwap, 1.0), Err(Error::Guard(_))));
}

#[test]
fn quarter_turn_partial_swap_acts_as_swap() {
    let h = Hamiltonian::diagonal(&[0.0, 0.7]).unwrap();
    let full = build_collision_model(&h, 3, CollisionStyle::FullSwap, 1.0).unwrap();
    let part = build_collision_model(&h, 3, CollisionStyle::PartialSwap { theta: std::f64::consts::FRAC_PI_2 }, 1.0).unwrap();
    let rho = random_density(8, 8, &mut rng(4));
    for t in [0.3, 2.0] {
        let a = evolve(&full, &rho, t).unwrap();
        let b = evolve(&part, &rho, t).unwrap();
        assert!(a.mat.max_abs_diff(&b.mat) < 1e-12);
    }
}

#[test]
fn finite_times_match_the_liouvillian_exponential() {
    let h = Hamiltonian::diagonal(&[0.0, 0.7]).unwrap();
    for style in [CollisionStyle::FullSwap, CollisionStyle::PartialSwap { theta: 0.6 }] {
        for n in [2usize, 3] {
            let m = build_collision_model(&h, n, style, 0.8).unwrap();
            let dim = m.dim();
            let rho = random_density(dim, dim, &mut rng(n as u64));
            let l = liouvillian(&m);
            for t in [0.0, 0.25, 3.0] {
                let oracle = unvec(&(&expm(&l.scale_real(t)).unwrap() * &vectorize(&rho.mat)), dim);
                let got = evolve(&m, &rho, t).unwrap();
                assert!(got.mat.max_abs_diff(&oracle) < 1e-10, "{style:?} n {n} t {t}");
            }
        }
    }
}

#[test]
fn long_time_limit_matches_the_kernel_projector() {
    let ctx = flat_ctx();
    let m = build_collision_model(&ctx.hamiltonian, 2, CollisionStyle::FullSwap, 1.0).unwrap();
    // The generator is Hermitian for swap collisions; its kernel projector is the limit.
    let e = herm_eig(&liouvillian(&m)).unwrap();
    let p = e.projector(|x| x.abs() < 1e-9);
    let rho = DensityMatrix::basis(2, 0).tensor(&ctx.gamma);
    let oracle = unvec(&(&p * &vectorize(&rho.mat)), 4);
    let got = evolve(&m, &rho, f64::INFINITY).unwrap();
    assert!(got.mat.max_abs_diff(&oracle) < 1e-12);
    let chk = epsilon_thermalizes(&got, &ctx, 2, 1.0).unwrap();
    let direct = trace_norm(&(&oracle - &ctx.gamma_power(2).mat));
    assert!((chk.residual - direct).abs() < 1e-12);
    // Symmetrized |0><0| (x) I/2 has spectrum (1/2, 1/4, 1/4, 0): distance 1/2 from I/4.
    assert!((chk.residual - 0.5).abs() < 1e-12);
}

#[test]
fn zero_time_is_identity() {
    let ctx = qubit_ctx(0.7);
    let m = build_collision_model(&ctx.hamiltonian, 3, CollisionStyle::PartialSwap { theta: 0.4 }, 2.0).unwrap();
    let rho = random_density(8, 3, &mut rng(2));
    assert!(evolve(&m, &rho, 0.0).unwrap().mat.max_abs_diff(&rho.mat) < 1e-15);
    assert!(evolve(&m, &rho, -1.0).is_err());
}

#[test]
fn thermal_product_is_stationary() {
    let ctx = qubit_ctx(0.7);
    for n in 1..=5 {
        for style in styles() {
            let m = build_collision_model(&ctx.hamiltonian, n, style, 1.0).unwrap();
            let g = ctx.gamma_power(n);
            for s in evolve_many(&m, &g, &[0.5, 10.0, f64::INFINITY]).unwrap() {
                assert!(s.mat.max_abs_diff(&g.mat) < 1e-10);
            }
        }
    }
}

#[test]
fn thermalization_check_examples() {
    let ctx = qubit_ctx(0.7);
    let ok = epsilon_thermalizes(&ctx.gamma_power(2), &ctx, 2, 0.0).unwrap();
    assert!(ok.holds && ok.residual < 1e-15);
    let eps = 0.1;
    let bumped = DensityMatrix::diagonal(&[0.7 + eps, 0.3 - eps]).unwrap();
    let r = epsilon_thermalizes(&bumped, &ctx, 1, eps).unwrap();
    assert!(!r.holds && (r.residual - 2.0 * eps).abs() < 1e-12);
}

#[test]
fn state_bath_size_examples() {
    let ctx = qubit_ctx(0.7);
    let grid = default_time_grid(1.0);
    let r = min_bath_size_state(&ctx.gamma, &ctx, 0.0, 3, &grid).unwrap();
    assert_eq!((r.n_star, r.time), (Some(1), Some(0.0)));
    let flat = flat_ctx();
    let r = min_bath_size_state(&DensityMatrix::basis(2, 0), &flat, 0.5, 5, &grid).unwrap();
    // Symmetrizing |0><0| with n-1 maximally mixed copies leaves distance 1/2 at n = 2.
    assert_eq!(r.n_star, Some(2));
    assert!(r.residual <= 0.5 + 1e-12);
    let r = min_bath_size_state(&DensityMatrix::basis(2, 0), &ctx, 0.0, 4, &grid).unwrap();
    assert_eq!(r.n_star, None);
    assert!(r.residual > 0.0);
    let rep = BathSizeReport { time: Some(f64::INFINITY), ..r };
    let json = serde_json::to_string(&rep).unwrap();
    assert!(json.contains("\"time\":\"inf\""), "{json}");
    assert_eq!(serde_json::from_str::<BathSizeReport>(&json).unwrap(), rep);
}

#[test]
fn long_time_limit_beats_finite_times_for_product_inputs() {
    let ctx = qubit_ctx(0.7);
    for n in 2..=4 {
        let m = build_collision_model(&ctx.hamiltonian, n, CollisionStyle::FullSwap, 1.0).unwrap();
        let rho = random_density(2, 1, &mut rng(n as u64)).tensor(&ctx.gamma_power(n - 1));
        let mut times = default_time_grid(1.0);
        times.push(f64::INFINITY);
        let res: Vec<f64> = evolve_many(&m, &rho, &times)
            .unwrap()
            .iter()
            .map(|s| epsilon_thermalizes(s, &ctx, n, 0.0).unwrap().residual)
            .collect();
        let last = *res.last().unwrap();
        assert!(res.iter().all(|r| last <= r + 1e-12));
    }
}

#[test]
fn channel_bath_size_examples() {
    let ctx = qubit_ctx(0.7);
    let c = channel_bath_size(&constant(&ctx.gamma, 2), &ctx, 0.0, 3, 2, 0).unwrap();
    assert_eq!(c.bath_size, Some(0));
    let deph = dephasing(2, None).unwrap();
    let mut prev = usize::MAX;
    for eps in [0.2, 0.6, 1.0, 1.5] {
        let b = channel_bath_size(&deph, &ctx, eps, 5, 2, 0).unwrap();
        let b = b.bath_size.unwrap_or(usize::MAX);
        assert!(b <= prev, "eps {eps}: {b} > {prev}");
        prev = b;
    }
    // Outputs |0>, |1> sit at distance 0.6 and 1.4 from gamma; eps = 1.5 needs no bath.
    assert_eq!(prev, 0);
}

#[test]
fn consistency_examples() {
    let ctx = qubit_ctx(0.75);
    let coh = ResourceSpec::coherence();
    let r = theorem3_consistency(&constant(&ctx.gamma, 2), &ctx, &coh, 0.1, 0.1, 0.01).unwrap();
    assert!(r.holds && r.capacity_lower.value == 0.0);
    assert!(r.bath_check.unwrap().holds);
    let r = theorem3_consistency(&dephasing(2, None).unwrap(), &ctx, &coh, 0.0, 0.1, 0.01).unwrap();
    assert_eq!(r.capacity_lower.value, 1.0);
    assert!(r.holds, "{r:?}");
    let bad = mix(&[0.5, 0.5], &[ChannelChoi::identity(2), constant(&DensityMatrix::basis(2, 0), 2)]).unwrap();
    assert!(matches!(theorem3_consistency(&bad, &ctx, &coh, 0.1, 0.1, 0.01), Err(Error::Precondition(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evolution_is_a_channel(seed in 0u64..10_000, n in 2usize..5, t in 0.0f64..5.0) {
        let ctx = qubit_ctx(0.7);
        let m = build_collision_model(&ctx.hamiltonian, n, CollisionStyle::PartialSwap { theta: 0.9 }, 1.0).unwrap();
        let rho = random_density(m.dim(), 2, &mut rng(seed));
        for s in evolve_many(&m, &rho, &[t, f64::INFINITY]).unwrap() {
            prop_assert!((s.mat.trace().re - 1.0).abs() < 1e-9);
            prop_assert!(s.min_eigenvalue() > -1e-9);
        }
    }

    #[test]
    fn annihilating_channels_pass_the_consistency_check(seed in 0u64..10_000) {
        let ctx = qubit_ctx(0.75);
        let n = random_gp_coherence_annihilating(&ctx.gamma, &mut rng(seed)).unwrap();
        let r = theorem3_consistency(&n, &ctx, &ResourceSpec::coherence(), 0.1, 0.1, 0.01).unwrap();
        prop_assert!(r.holds);
        prop_assert!(r.bath_check.unwrap().holds);
    }
}
