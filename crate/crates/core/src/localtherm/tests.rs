use super::*;
use crate::channels::{compose, tensor};
use crate::kernel::psd_sqrt;
use crate::quantum::random::{haar_pure_state, rng};
use proptest::prelude::*;

fn qubit_ctx(p0: f64) -> ThermalContext {
    ThermalContext::from_populations(&[p0, 1.0 - p0]).unwrap()
}

fn flat(dim: usize) -> ThermalContext {
    ThermalContext::new(Hamiltonian::diagonal(&(0..dim).map(|k| k as f64).collect::<Vec<_>>()).unwrap(), 0.0).unwrap()
}

fn c_ctx(beta: f64) -> ThermalContext {
    ThermalContext::new(Hamiltonian::diagonal(&[0.0, 0.4, 1.1, 1.5, 2.3]).unwrap(), beta).unwrap()
}

fn setups() -> Vec<TripartiteSetup> {
    vec![
        TripartiteSetup::weyl(flat(2), flat(2), flat(5)).unwrap(),
        TripartiteSetup::weyl(qubit_ctx(0.7), qubit_ctx(0.7), c_ctx(0.8)).unwrap(),
        TripartiteSetup::weyl(qubit_ctx(0.7), qubit_ctx(0.6), c_ctx(1.3)).unwrap(),
    ]
}

/// The three stages composed from generic channel algebra: Kraus encoder, Choi composition and
/// tensor products.
fn staged(setup: &TripartiteSetup, kappa: f64) -> ChannelChoi {
    let d = setup.d;
    let nc = d * d + 1;
    let sqrt_gc = psd_sqrt(&setup.ctx_c.gamma.mat).unwrap();
    let mut kraus = Vec::new();
    for (n, v) in setup.v_list.iter().enumerate() {
        for e in 0..nc {
            // sqrt(gamma_C)|e><n| with V_n on B.
            let col = sqrt_gc.col(e);
            let k = ComplexMatrix::from_fn(nc, nc, |i, j| if j == n { col[i] } else { ZERO });
            kraus.push(kron(v, &k));
        }
    }
    let l = ChannelChoi::from_kraus(&kraus).unwrap();
    let twirl = tensor(&crate::channels::twirl_uu_star(d), &ChannelChoi::identity(nc));
    let enc = tensor(&ChannelChoi::identity(d), &l);
    let dk = tensor(&mixer(&setup.ctx_a, &setup.ctx_b, kappa).unwrap(), &ChannelChoi::identity(nc));
    compose(&dk, &compose(&enc, &twirl).unwrap()).unwrap()
}

fn bell(d: usize, v: &ComplexMatrix) -> ComplexMatrix {
    let k = kron(&ComplexMatrix::identity(d), v).mul_vec(&max_entangled_ket(d));
    ComplexMatrix::outer(&k, &k)
}

#[test]
fn kappa_star_examples() {
    assert_eq!(kappa_star(&flat(2), &flat(2)).unwrap(), 1.0);
    assert!((kappa_star(&qubit_ctx(0.7), &qubit_ctx(0.6)).unwrap() - 0.6).abs() < 1e-12);
    assert!(kappa_star(&qubit_ctx(1.0 - 1e-9), &qubit_ctx(0.5)).unwrap() < 1e-8);
    assert!(kappa_star(&flat(2), &flat(3)).is_err());
}

#[test]
fn alt_thermal_examples() {
    let g = qubit_ctx(0.7);
    assert!(alt_thermal(&g, 0.0).unwrap().mat.max_abs_diff(&g.gamma.mat) < 1e-15);
    for k in [0.0, 0.4, 1.0] {
        assert!(alt_thermal(&flat(2), k).unwrap().mat.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }
    let edge = alt_thermal(&g, 0.6).unwrap();
    assert!(edge.mat.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0, 0.0])) < 1e-12);
    assert!(matches!(alt_thermal(&g, 0.65), Err(Error::NotPsd(_))));
    assert!(alt_thermal(&g, 1.2).is_err());
}

#[test]
fn builder_matches_the_staged_composition() {
    for s in setups() {
        let ks = kappa_star(&s.ctx_a, &s.ctx_b).unwrap();
        for kappa in [0.0, 0.5 * ks, ks] {
            let built = build_local_thermalization(&s, kappa).unwrap();
            let d = built.cptp_defect().unwrap();
            assert!(d.min_eigenvalue > -1e-9 && d.trace_defect < 1e-9);
            assert!(built.choi.max_abs_diff(&staged(&s, kappa).choi) < 1e-12);
        }
    }
}

#[test]
fn zero_kappa_outputs_the_thermal_product() {
    let s = &setups()[2];
    let ch = build_local_thermalization(s, 0.0).unwrap();
    let target = s.ctx_a.gamma.tensor(&s.gamma_bc()).mat;
    for seed in 0..4 {
        let out = ch.apply(&haar_pure_state(20, &mut rng(seed))).unwrap();
        assert!(out.mat.max_abs_diff(&target) < 1e-12);
    }
}

#[test]
fn bell_input_traced_through_the_stages() {
    // |Psi+> survives the twirl, V_m moves it to the m-th Bell state, the mixer then acts.
    let s = &setups()[1];
    let kappa = 0.6;
    let ch = build_local_thermalization(s, kappa).unwrap();
    let psi = max_entangled_ket(2);
    let alt = alt_thermal(&s.ctx_a, kappa).unwrap().tensor(&alt_thermal(&s.ctx_b, kappa).unwrap()).mat;
    for m in 0..4 {
        let input = DensityMatrix { dims: vec![20], mat: kron(&ComplexMatrix::outer(&psi, &psi), &ComplexMatrix::unit(5, m, m)) };
        let out = ch.apply(&input).unwrap().with_dims(vec![2, 2, 5]).unwrap();
        let ab = out.partial_trace(&[0, 1]).unwrap();
        let expected = &alt.scale_real(1.0 - kappa) + &bell(2, &s.v_list[m]).scale_real(kappa);
        assert!(ab.mat.max_abs_diff(&expected) < 1e-12, "m {m}");
    }
}

#[test]
fn marginals_are_thermal() {
    for s in setups() {
        let ks = kappa_star(&s.ctx_a, &s.ctx_b).unwrap();
        let ch = build_local_thermalization(&s, ks).unwrap();
        let r = verify_local_thermalization(&ch, &s, 8, 3, 1e-9).unwrap();
        assert!(r.holds && r.max_deviation <= 1e-9, "{r:?}");
        assert_eq!(r.inputs_checked, 400 + 16);
    }
}

#[test]
fn verification_rejects_identity_and_accepts_constant() {
    let s = &setups()[1];
    let id = ChannelChoi::identity(20);
    let r = verify_local_thermalization(&id, s, 0, 0, 1e-9).unwrap();
    assert!(!r.holds);
    // Witness |0><0| on A: distance 2 * 0.3 from gamma_A; a pure BC input is farther still.
    assert!(r.deviation_a >= 0.6 - 1e-12);
    let target = s.ctx_a.gamma.tensor(&s.gamma_bc());
    let r = verify_local_thermalization(&constant(&target, 20), s, 2, 0, 1e-9).unwrap();
    assert!(r.holds && r.max_deviation < 1e-12);
    assert!(verify_local_thermalization(&ChannelChoi::identity(4), s, 0, 0, 1e-9).is_err());
}

#[test]
fn builder_guards() {
    let s = &setups()[1];
    assert!(matches!(build_local_thermalization(s, 0.7), Err(Error::InvalidParameter(_))));
    let big = TripartiteSetup::weyl(flat(3), flat(3), flat(10)).unwrap();
    assert!(matches!(build_local_thermalization(&big, 0.5), Err(Error::Guard(_))));
    let mut bad = weyl_unitaries(2);
    bad.push(crate::kernel::pauli_x());
    assert!(TripartiteSetup::new(flat(2), flat(2), flat(5), bad).is_err());
    assert!(TripartiteSetup::weyl(flat(2), flat(2), flat(4)).is_err());
}

#[test]
fn setup_file_parsing() {
    let spec: SetupSpec = serde_json::from_str(r#"{"d":2,"beta_a":0,"beta_b":0,"beta_c":0,"v_list":"weyl"}"#).unwrap();
    let s = spec.build().unwrap();
    assert_eq!(s.v_list.len(), 5);
    assert!(s.ctx_a.gamma.mat.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    let spec: SetupSpec = serde_json::from_str(r#"{"d":2,"beta_a":1,"beta_b":1,"beta_c":1,"h_a":[0,0.8472978603872037],"h_b":{"energies":[0,1]}}"#).unwrap();
    let s = spec.build().unwrap();
    assert!((s.ctx_a.p_min - 0.3).abs() < 1e-12);
    assert!(serde_json::from_str::<SetupSpec>(r#"{"d":2,"beta_a":0,"beta_b":0,"beta_c":0,"extra":1}"#).is_err());
    let spec: SetupSpec = serde_json::from_str(r#"{"d":2,"beta_a":0,"beta_b":0,"beta_c":0,"v_list":"haar"}"#).unwrap();
    assert!(spec.build().is_err());
}

#[test]
fn fef_examples() {
    let phi = max_entangled(3);
    let r = fef(&phi, 4, 0).unwrap();
    assert!((r.value - 1.0).abs() < 1e-12 && r.converged);
    let mixed = DensityMatrix::maximally_mixed(9).with_dims(vec![3, 3]).unwrap();
    assert!((fef(&mixed, 4, 0).unwrap().value - 1.0 / 9.0).abs() < 1e-12);
    // A locally rotated Bell state is found from the Phi+ start and from random starts.
    let u = haar_unitary(2, &mut rng(9));
    let rotated = crate::quantum::max_entangled_from_unitary(&u).unwrap();
    assert!((fef(&rotated, 8, 1).unwrap().value - 1.0).abs() < 1e-9);
    assert!(fef(&DensityMatrix::maximally_mixed(6), 2, 0).is_err());
}

#[test]
fn isotropic_fef_against_random_probes() {
    for d in [2usize, 3] {
        let n = d * d;
        let phi = max_entangled(d).mat;
        for p in [0.0, 0.3, 0.8] {
            let mut m = phi.scale_real(p);
            m.axpy(c((1.0 - p) / n as f64, 0.0), &ComplexMatrix::identity(n));
            let rho = DensityMatrix::new(vec![d, d], m).unwrap();
            let exact = p + (1.0 - p) / n as f64;
            let r = fef(&rho, 8, 2).unwrap();
            assert!((r.value - exact).abs() < 1e-12);
            let mut g = rng(d as u64);
            let probe_max = (0..2000)
                .map(|_| me_overlap(&rho.mat, &haar_unitary(d, &mut g)))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(probe_max <= exact + 1e-12);
        }
    }
}

#[test]
fn demo_examples() {
    let s = &setups()[0];
    let r = theorem5_demo(s, None, Some(0.0)).unwrap();
    assert_eq!(r.kappa_star, 1.0);
    assert!((r.success - 1.0).abs() < 1e-12);
    assert_eq!(r.capacity_lower.value, 2.0);
    assert!(r.entangled && (r.fef.value - 1.0).abs() < 1e-9);
    let s = TripartiteSetup::weyl(qubit_ctx(0.7), qubit_ctx(0.7), c_ctx(0.5)).unwrap();
    let r = theorem5_demo(&s, None, None).unwrap();
    assert!((r.kappa - 0.6).abs() < 1e-12);
    assert!((r.success - 0.7).abs() < 1e-12 && (r.analytic - 0.7).abs() < 1e-12);
    assert!((r.threshold - 0.3).abs() < 1e-12);
    assert_eq!(r.capacity_lower.value, 2.0);
    assert!(r.marginals.holds);
    // alt = |00><00| at the edge, so the Phi+ overlap is 0.6 + 0.4 / 2.
    assert!(r.entangled && r.fef.value >= 0.8 - 1e-12);
    let below = theorem5_demo(&s, None, Some(0.29)).unwrap();
    assert_eq!(below.capacity_lower.value, 0.0);
}

#[test]
fn unequal_temperatures_can_defeat_the_fef_witness() {
    // kappa* = 0.06 with alt_A = |0><0| and alt_B = I/2: output 0.06 Phi+ + 0.94 |0><0| (x) I/2
    // has fef 0.06 + 0.94 / 4 but a negative partial transpose.
    let s = TripartiteSetup::weyl(qubit_ctx(0.97), flat(2), c_ctx(1.0)).unwrap();
    let r = theorem5_demo(&s, None, None).unwrap();
    assert!((r.fef.value - (0.06 + 0.94 / 4.0)).abs() < 1e-9, "{}", r.fef.value);
    assert!(!r.fef_witness && r.entangled);
}

#[test]
fn mixer_has_maximally_entangled_capacity_over_threshold() {
    for s in setups() {
        let ks = kappa_star(&s.ctx_a, &s.ctx_b).unwrap();
        let eps = 0.75 * (1.0 - ks);
        let dk = mixer(&s.ctx_a, &s.ctx_b, ks).unwrap();
        let cme = crate::capacity::cme_capacity(&dk, eps, 2, 0).unwrap();
        assert_eq!(cme.m, 4, "kappa* {ks}");
    }
}

#[test]
fn fef_ascent_never_decreases() {
    let mut g = rng(11);
    for _ in 0..5 {
        let rho = crate::quantum::random::random_density(9, 3, &mut g);
        let (h, _) = fef_ascent(&rho.mat, haar_unitary(3, &mut g)).unwrap();
        assert!(h.windows(2).all(|w| w[1] >= w[0] - 1e-14));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn success_matches_closed_form_across_kappa(p_a in 0.5f64..0.95, p_b in 0.5f64..0.95, frac in 0.0f64..=1.0) {
        let s = TripartiteSetup::weyl(qubit_ctx(p_a), qubit_ctx(p_b), c_ctx(0.7)).unwrap();
        let ks = kappa_star(&s.ctx_a, &s.ctx_b).unwrap();
        let r = theorem5_demo(&s, Some(frac * ks), None).unwrap();
        prop_assert!((r.success - r.analytic).abs() < 1e-12);
        prop_assert!(r.marginals.holds);
        // Phi+ overlap of kappa Phi+ + (1 - kappa) alt_A (x) alt_B for diagonal alt states.
        let (a, b) = (alt_thermal(&s.ctx_a, r.kappa).unwrap().mat.real_diag(), alt_thermal(&s.ctx_b, r.kappa).unwrap().mat.real_diag());
        let base = r.kappa + (1.0 - r.kappa) * (a[0] * b[0] + a[1] * b[1]) / 2.0;
        prop_assert!(r.fef.value >= base - 1e-12);
    }

    #[test]
    fn edge_kappa_outputs_are_entangled(p_a in 0.5f64..0.97, p_b in 0.5f64..0.97) {
        let s = TripartiteSetup::weyl(qubit_ctx(p_a), qubit_ctx(p_b), c_ctx(1.0)).unwrap();
        let r = theorem5_demo(&s, None, None).unwrap();
        prop_assert!(r.entangled && r.min_pt_eigenvalue < -PT_MARGIN, "{r:?}");
        // Equal thermal states make both alternative states pure: fef >= kappa + (1 - kappa)/2.
        let s = TripartiteSetup::weyl(qubit_ctx(p_a), qubit_ctx(p_a), c_ctx(1.0)).unwrap();
        let r = theorem5_demo(&s, None, None).unwrap();
        prop_assert!(r.fef_witness, "fef {}", r.fef.value);
    }

    #[test]
    fn fef_is_at_least_the_phi_plus_overlap(seed in 0u64..10_000) {
        let rho = crate::quantum::random::random_density(4, 2, &mut rng(seed)).with_dims(vec![2, 2]).unwrap();
        let base = max_entangled(2).mat.trace_product(&rho.mat).re;
        prop_assert!(fef(&rho, 3, seed).unwrap().value >= base - 1e-12);
    }
}
