use objectify::info::{
    block_skew_identity_check, daimon_report, holevo_information, shannon_entropy, von_neumann_entropy, DaimonScenario,
};
use objectify::matrix::ComplexMatrix;
use objectify::objects::{Hamiltonian, State};
use objectify::sample::{
    random_block_data, random_distribution, random_energies, random_hamiltonian, random_scheme, random_state,
    random_unitary, RandomScheme,
};
use objectify::schemes::{objectify, ObjectificationEnsemble};
use objectify::thermo::{
    conditional_energetics, conditional_system_energy_change, fixed_point_check, heat_variance, measurement_energetics,
    skew_information, variance_decomposition,
};
use objectify::{luders_instrument, Povm};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHAS: [f64; 3] = [0.25, 0.5, 0.75];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_instance(seed: u64) -> (ChaCha8Rng, RandomScheme) {
    let mut r = rng(seed);
    let ds = r.random_range(2..=4);
    let da = r.random_range(2..=4);
    let rs = random_scheme(&mut r, ds, da).unwrap();
    (r, rs)
}

fn sharp_instance(seed: u64) -> RandomScheme {
    let mut r = rng(seed);
    loop {
        let ds = r.random_range(2..=3);
        let da = r.random_range(2..=4);
        let rs = random_scheme(&mut r, ds, da).unwrap();
        if rs.sharp {
            return rs;
        }
    }
}

/// Ensemble of arbitrary joint states, not necessarily objectified.
fn random_ensemble(r: &mut ChaCha8Rng, dims: (usize, usize), k: usize) -> ObjectificationEnsemble {
    let n = dims.0 * dims.1;
    let probs = random_distribution(r, k);
    let sigmas = (0..k).map(|_| random_state(r, n).into_matrix()).collect();
    let labels = (0..k).map(|x| x.to_string()).collect();
    ObjectificationEnsemble::new(labels, dims, probs, sigmas, 1e-9).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn first_law_holds(seed: u64) {
        let (_, rs) = random_instance(seed);
        let rep = measurement_energetics(&rs.scheme, &rs.pointer, &rs.h_s, &rs.h_a, &rs.rho, 1e-9).unwrap();
        prop_assert!(rep.first_law_residual.abs() <= 1e-10);
        prop_assert!((rep.work - rep.work_marginal_form).abs() <= 1e-10);
        prop_assert!((rep.mean_heat - rep.mean_heat_apparatus).abs() <= 1e-10);
        for o in &rep.outcomes {
            prop_assert!((o.delta_e - o.delta_e_s - o.delta_e_a).abs() <= 1e-10);
        }
    }

    #[test]
    fn heat_variance_identities_on_arbitrary_ensembles(seed: u64, k in 1usize..=4) {
        let mut r = rng(seed);
        let dims = (r.random_range(1..=3), r.random_range(1..=3));
        let ens = random_ensemble(&mut r, dims, k);
        let h = random_hamiltonian(&mut r, dims.0 * dims.1);
        for alpha in ALPHAS {
            let v = heat_variance(&ens, &h, alpha).unwrap();
            prop_assert!(v.residual <= 1e-10);
            prop_assert!(v.split_residual <= 1e-10);
            prop_assert!(v.delta_v_qu >= -1e-10 && v.delta_v_cl >= -1e-10);
            prop_assert!(v.delta_v_cl >= v.delta_v_qu - 1e-10);
        }
    }

    #[test]
    fn heat_uncertainty_is_classical(seed: u64) {
        let (_, rs) = random_instance(seed);
        let ens = objectify(&rs.scheme, &rs.pointer, &rs.rho, 1e-9).unwrap();
        let h = Hamiltonian::additive(&rs.h_s, &rs.h_a);
        for alpha in ALPHAS {
            let v = heat_variance(&ens, &h, alpha).unwrap();
            prop_assert!(v.delta_v_qu.abs() <= 1e-9, "alpha {} dVqu {}", alpha, v.delta_v_qu);
            prop_assert!((v.var_q - v.delta_v_cl).abs() <= 1e-9);
        }
    }

    #[test]
    fn skew_information_bounds(seed: u64, d in 1usize..=5) {
        let mut r = rng(seed);
        let a = random_hamiltonian(&mut r, d);
        let rho = random_state(&mut r, d);
        for alpha in ALPHAS {
            let v = variance_decomposition(&a, &rho, alpha).unwrap();
            prop_assert!(v.quantum >= -1e-10 && v.quantum <= v.total + 1e-10);
            prop_assert!((v.quantum + v.classical - v.total).abs() <= 1e-12);
        }
    }

    #[test]
    fn skew_information_is_convex(seed: u64, d in 1usize..=4, k in 1usize..=4) {
        let mut r = rng(seed);
        let a = random_hamiltonian(&mut r, d).matrix().clone();
        let p = random_distribution(&mut r, k);
        let states: Vec<_> = (0..k).map(|_| random_state(&mut r, d).into_matrix()).collect();
        let mut mix = ComplexMatrix::zeros(d, d);
        for (pi, s) in p.iter().zip(&states) {
            mix += &s.scale_real(*pi);
        }
        for alpha in ALPHAS {
            let avg: f64 = p.iter().zip(&states).map(|(pi, s)| pi * skew_information(&a, s, alpha).unwrap()).sum();
            prop_assert!(avg >= skew_information(&a, &mix, alpha).unwrap() - 1e-10);
        }
    }

    #[test]
    fn pointer_function_hamiltonian_is_a_fixed_point(seed: u64) {
        let (mut r, rs) = random_instance(seed);
        let energies = random_energies(&mut r, rs.scheme.z().len());
        let h_a = rs.pointer_function_hamiltonian(&energies);
        prop_assert!(fixed_point_check(&rs.pointer, &h_a, 1e-10).unwrap().holds);
        let rep = measurement_energetics(&rs.scheme, &rs.pointer, &rs.h_s, &h_a, &rs.rho, 1e-9).unwrap();
        prop_assert!(rep.mean_heat.abs() <= 1e-10);
    }

    #[test]
    fn luders_pointer_fixes_yanase_hamiltonian(seed: u64) {
        let rs = sharp_instance(seed);
        let l = luders_instrument(rs.scheme.z()).unwrap();
        prop_assert!(fixed_point_check(&l, &rs.h_a, 1e-10).unwrap().holds);
    }

    #[test]
    fn conditional_work_averages_to_work(seed: u64) {
        let rs = sharp_instance(seed);
        let rep = conditional_energetics(&rs.scheme, &rs.pointer, &rs.h_s, &rs.h_a, &rs.rho, 1e-9).unwrap();
        prop_assert!((rep.mean_work - rep.work).abs() <= 1e-10);
        for rec in &rep.outcomes {
            prop_assert!((rec.heat - rec.heat_apparatus).abs() <= 1e-10);
            prop_assert!((rec.delta_e - rec.work - rec.heat).abs() <= 1e-10);
        }
    }

    #[test]
    fn conditional_system_change_is_ensemble_consistent(seed: u64) {
        let (mut r, rs) = random_instance(seed);
        let ins = objectify::induced_instrument(&rs.scheme).unwrap();
        let d = ins.dim();
        let pk = random_distribution(&mut r, 2);
        let members = [random_state(&mut r, d), random_state(&mut r, d)];
        let rho = State::new(&members[0].matrix().scale_real(pk[0]) + &members[1].matrix().scale_real(pk[1]), 1e-9).unwrap();
        for x in 0..ins.len() {
            let effect = ins.op(x).effect();
            let px = effect.trace_product(rho.matrix());
            if px <= 1e-9 {
                continue;
            }
            let mut avg = 0.0;
            for (k, member) in members.iter().enumerate() {
                let pxk = effect.trace_product(member.matrix());
                if pxk > 1e-12 {
                    avg += pk[k] * pxk / px * conditional_system_energy_change(&ins, &rs.h_s, member, x).unwrap();
                }
            }
            let whole = conditional_system_energy_change(&ins, &rs.h_s, &rho, x).unwrap();
            prop_assert!((avg - whole).abs() <= 1e-10);
        }
    }

    #[test]
    fn entropy_is_additive(seed: u64, d1 in 1usize..=3, d2 in 1usize..=3) {
        let mut r = rng(seed);
        let (a, b) = (random_state(&mut r, d1), random_state(&mut r, d2));
        let joint = von_neumann_entropy(&a.tensor(&b)).unwrap();
        prop_assert!((joint - von_neumann_entropy(&a).unwrap() - von_neumann_entropy(&b).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn orthogonal_mixing_adds_shannon_entropy(seed: u64, k in 1usize..=3, m in 1usize..=2) {
        let mut r = rng(seed);
        let d = k * m;
        let w = random_unitary(&mut r, d);
        let p = random_distribution(&mut r, k);
        let mut mix = ComplexMatrix::zeros(d, d);
        let mut avg = 0.0;
        for (i, pi) in p.iter().enumerate() {
            let local = random_state(&mut r, m);
            let mut s = ComplexMatrix::zeros(d, d);
            for a in 0..m {
                for b in 0..m {
                    s.set(i * m + a, i * m + b, local.matrix().get(a, b));
                }
            }
            let s = &(&w * &s) * &w.adjoint();
            avg += pi * von_neumann_entropy(&local).unwrap();
            mix += &s.scale_real(*pi);
        }
        let lhs = von_neumann_entropy(&State::new(mix, 1e-9).unwrap()).unwrap();
        prop_assert!((lhs - shannon_entropy(&p).unwrap() - avg).abs() <= 1e-9);
    }

    #[test]
    fn holevo_never_exceeds_shannon(seed: u64, d in 1usize..=4, k in 1usize..=4) {
        let mut r = rng(seed);
        let p = random_distribution(&mut r, k);
        let states: Vec<_> = (0..k).map(|_| random_state(&mut r, d).into_matrix()).collect();
        let chi = holevo_information(&p, &states).unwrap();
        prop_assert!(chi >= -1e-10 && chi <= shannon_entropy(&p).unwrap() + 1e-10);
    }

    #[test]
    fn daimon_transfer_is_lossless_under_yanase(seed: u64) {
        let (mut r, rs) = random_instance(seed);
        let ens = objectify(&rs.scheme, &rs.pointer, &rs.rho, 1e-9).unwrap();
        let times: Vec<f64> = (0..ens.len()).map(|x| x as f64 * 0.7 + r.random_range(0.0..0.5)).collect();
        let h = Hamiltonian::additive(&rs.h_s, &rs.h_a);
        for alpha in ALPHAS {
            let sc = DaimonScenario::with_default_memory(ens.clone(), times.clone(), h.clone(), alpha).unwrap();
            let rep = daimon_report(&sc).unwrap();
            prop_assert!(rep.entropy_gap.abs() <= 1e-9, "entropy gap {}", rep.entropy_gap);
            prop_assert!(rep.skew_gap.abs() <= 1e-9, "skew gap {}", rep.skew_gap);
            prop_assert!((rep.skew_total - rep.skew_total_direct).abs() <= 1e-9);
        }
    }

    #[test]
    fn daimon_bounds_hold_without_yanase(seed: u64) {
        let (mut r, rs) = random_instance(seed);
        let ens = objectify(&rs.scheme, &rs.pointer, &rs.rho, 1e-9).unwrap();
        let times: Vec<f64> = (0..ens.len()).map(|x| 0.3 + x as f64).collect();
        let h_a = random_hamiltonian(&mut r, rs.scheme.dim_a());
        let h = Hamiltonian::additive(&rs.h_s, &h_a);
        let sc = DaimonScenario::with_default_memory(ens, times, h, 0.5).unwrap();
        let rep = daimon_report(&sc).unwrap();
        prop_assert!(rep.holevo_x <= rep.shannon_h + 1e-10);
        prop_assert!(rep.skew_gap <= 1e-10);
        prop_assert!((rep.skew_total - rep.skew_total_direct).abs() <= 1e-9);
    }

    #[test]
    fn block_skew_identity(seed: u64, blocks in 2usize..=3, d in 2usize..=3) {
        let mut r = rng(seed);
        let (p, sigmas, h1, h2) = random_block_data(&mut r, blocks, d);
        for alpha in ALPHAS {
            let rep = block_skew_identity_check(&p, &sigmas, &h1, &h2, alpha).unwrap();
            prop_assert!(rep.residual <= 1e-10, "residual {}", rep.residual);
        }
    }
}

/// Unsharp qubit: E = {0.5 ± 0.3 sx}, rho = |0>, H_A = sx
/// on the normal Lüders scheme. Values from a direct numerical evaluation.
#[test]
fn yanase_violation_shows_quantum_heat_and_information_loss() {
    let sx = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let i = ComplexMatrix::identity(2);
    let e = Povm::with_indexed_outcomes(vec![&i.scale_real(0.5) + &sx.scale_real(0.3), &i.scale_real(0.5) - &sx.scale_real(0.3)], 1e-9)
        .unwrap();
    let (m, _) = objectify::normal_scheme_for_luders(&e, &[0.0, 1.0]).unwrap();
    let j = luders_instrument(m.z()).unwrap();
    let ens = objectify(&m, &j, &State::basis(2, 0), 1e-9).unwrap();
    let h = Hamiltonian::additive(&Hamiltonian::diagonal(&[0.0, 1.0]), &Hamiltonian::new(sx, 1e-12).unwrap());
    let v = heat_variance(&ens, &h, 0.5).unwrap();
    assert!(v.delta_v_qu > 1e-3, "{}", v.delta_v_qu);
    let sc = DaimonScenario::with_default_memory(ens, vec![0.3, 1.7], h, 0.5).unwrap();
    let rep = daimon_report(&sc).unwrap();
    assert!(rep.entropy_gap < -1e-3, "{}", rep.entropy_gap);
    assert!(rep.holevo_x <= rep.kappa_bound + 1e-12);
}

#[test]
fn commuting_block_states_have_no_skew() {
    let mut r = rng(9);
    let (p, _, h1, _) = random_block_data(&mut r, 3, 2);
    let h2 = Hamiltonian::diagonal(&[0.5, -0.5]);
    let sigmas: Vec<_> = (0..3).map(|x| ComplexMatrix::from_real_diagonal(&[0.2 + 0.2 * x as f64, 0.8 - 0.2 * x as f64])).collect();
    let rep = block_skew_identity_check(&p, &sigmas, &h1, &h2, 0.5).unwrap();
    assert!(rep.lhs.abs() < 1e-12 && rep.rhs.abs() < 1e-12);
}
