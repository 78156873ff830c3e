use gbzlab::linalg::C64;
use gbzlab::model::{build_hamiltonian, site_index, Chain, ModelParams, Sublattice};
use gbzlab::spectral::{
    chain_weight, diagonalize, localization_modulus, model_energies, EigenPair, Precision, RESIDUAL_BOUND,
};
use gbzlab::validate::hausdorff;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.2..2.0f64, 0.5..1.5f64, -1.5..1.5f64, 0.0..2.5f64, 0.0..1.0f64, 3usize..=8)
        .prop_filter("off the degenerate lines", |(t1, _, g, ..)| (t1.abs() - g.abs()).abs() > 0.05)
        .prop_map(|(t1, t2, gamma, epsilon, frac, n)| {
            let tb = if frac > 0.5 { t2 } else { 2.0 * frac * t2 };
            ModelParams::ring(t1, t2, gamma, epsilon, n).with_boundary(tb)
        })
}

fn residual(h: &gbzlab::linalg::ComplexMatrix, p: &EigenPair) -> f64 {
    h.matvec(&p.vector).iter().zip(&p.vector).map(|(a, v)| (a - p.energy * v).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pairs_meet_the_residual_contract(p in params()) {
        let h = build_hamiltonian(&p).unwrap();
        let pairs = diagonalize(&p, Precision::Auto).unwrap();
        prop_assert_eq!(pairs.len(), p.dim());
        for q in &pairs {
            prop_assert!(residual(&h, q) <= RESIDUAL_BOUND * h.norm_inf());
            let norm: f64 = q.vector.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&q.rho_i));
            prop_assert!((q.rho_i - chain_weight(q, p.n_cells).unwrap()).abs() < 1e-14);
        }
        for w in pairs.windows(2) {
            prop_assert!(w[0].energy.im <= w[1].energy.im);
        }
    }

    #[test]
    fn gain_chain_dominates_the_upper_half_plane(p in params().prop_filter("dissipative", |p| p.epsilon > 0.1)) {
        let pairs = diagonalize(&p, Precision::Auto).unwrap();
        let mean = |up: bool| {
            let v: Vec<f64> = pairs.iter().filter(|q| (q.energy.im > 0.0) == up && q.energy.im != 0.0).map(|q| q.rho_i).collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        };
        prop_assert!(mean(true) > mean(false), "{} vs {}", mean(true), mean(false));
    }

    #[test]
    fn spectrum_is_closed_under_negation_and_conjugation(p in params()) {
        let e = model_energies(&p, Precision::DoubleDouble).unwrap();
        let neg: Vec<C64> = e.iter().map(|z| -z).collect();
        let conj: Vec<C64> = e.iter().map(|z| z.conj()).collect();
        prop_assert!(hausdorff(&e, &neg) < 1e-8);
        prop_assert!(hausdorff(&e, &conj) < 1e-8);
    }

    #[test]
    fn matrix_conjugation_and_chain_swap_flip_dissipation(p in params()) {
        let h = build_hamiltonian(&p).unwrap();
        let flipped = build_hamiltonian(&p.with_epsilon(-p.epsilon)).unwrap();
        prop_assert_eq!(h.conj(), flipped.clone());
        let m = p.dim() / 2;
        let swap = |i: usize| if i < m { i + m } else { i - m };
        for i in 0..p.dim() {
            for j in 0..p.dim() {
                prop_assert_eq!(h[(swap(i), swap(j))], flipped[(i, j)]);
            }
        }
    }

    #[test]
    fn pure_exponential_is_fitted_exactly(beta in 0.3..2.5f64, a in 0.2..3.0f64, n in 12usize..40, chain_i in any::<bool>()) {
        let p = ModelParams::ring(1.3, 1.0, 0.4, 1.0, n);
        let chain = if chain_i { Chain::I } else { Chain::II };
        let mut v = vec![C64::new(0.0, 0.0); p.dim()];
        for cell in 0..n {
            let amp = beta.powi(cell as i32);
            v[site_index(n, chain, cell, Sublattice::A)] = C64::new(amp, 0.0);
            v[site_index(n, chain, cell, Sublattice::B)] = C64::new(0.0, a * amp);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        let pair = EigenPair::new(C64::new(0.0, 0.0), v);
        let m = localization_modulus(&pair, &p).unwrap();
        prop_assert!((m - beta).abs() < 1e-10, "{m} vs {beta}");
    }
}
